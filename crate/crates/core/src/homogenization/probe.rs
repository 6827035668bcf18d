use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use super::relaxed::solve_relaxed;
use crate::error::Result;
use crate::fem::norms::flux_pairing;
use crate::fem::{lumped_mass, Mesh, NodalField, SolverParams};
use crate::problem_model::{CoefficientField, Domain, Load, MeasureSpec, Point, MAX_DIM};

/// One member of a coefficient sequence with its measure and mesh.
#[derive(Debug, Clone)]
pub struct ProbeCase {
    pub eps: f64,
    pub a_eps: CoefficientField,
    pub mu_eps: MeasureSpec,
    pub mesh: Mesh,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeRow {
    pub eps: f64,
    /// `||u_eps - u0||_{L^2}`.
    pub l2_gap: f64,
    /// `|int (A_eps Du_eps - A0 Du0) . Dphi|` for the fixed test function.
    pub flux_gap: f64,
}

/// Fixed test function `prod_k cos(pi t_k / 2)` in box coordinates `t in [0,1]^n`.
/// It does not vanish on the lower faces, so the flux pairing is not reduced
/// to the load by integration by parts, and it has no reflection symmetry
/// that would cancel the pairing for symmetric solutions.
pub fn probe_test_gradient(domain: &Domain) -> impl Fn(&Point) -> Point + Sync + '_ {
    move |x: &Point| {
        let dim = domain.dim;
        let mut t = [0.0; MAX_DIM];
        for k in 0..dim {
            t[k] = (x[k] - domain.lower[k]) / domain.edge(k);
        }
        let mut g = [0.0; MAX_DIM];
        for a in 0..dim {
            let mut v = -FRAC_PI_2 / domain.edge(a) * (FRAC_PI_2 * t[a]).sin();
            for k in (0..dim).filter(|k| *k != a) {
                v *= (FRAC_PI_2 * t[k]).cos();
            }
            g[a] = v;
        }
        g
    }
}

/// Both surrogates for already computed `u_eps` and `u0` on the same grid.
pub fn probe_row(eps: f64, u_eps: &NodalField, a_eps: &CoefficientField, u0: &NodalField, a0: &CoefficientField) -> Result<ProbeRow> {
    u_eps.check_same_grid(u0)?;
    let grid = u_eps.grid;
    let mass = lumped_mass(&grid);
    let l2_gap = (0..mass.len()).map(|i| mass[i] * (u_eps.values[i] - u0.values[i]).powi(2)).sum::<f64>().sqrt();
    let test = probe_test_gradient(&grid.domain);
    let flux_gap = (flux_pairing(u_eps, a_eps, &test) - flux_pairing(u0, a0, &test)).abs();
    Ok(ProbeRow { eps, l2_gap, flux_gap })
}

/// Weak-convergence surrogates for each case, with `u0` solved on the same
/// mesh as `u_eps`.
pub fn h_convergence_probe(
    cases: &[ProbeCase],
    a0: &CoefficientField,
    mu0: &MeasureSpec,
    f: impl Fn(&Point) -> f64,
    params: &SolverParams,
) -> Result<Vec<ProbeRow>> {
    let mut rows = Vec::with_capacity(cases.len());
    for case in cases {
        let grid = case.mesh.grid;
        let load = Load::new(NodalField::from_fn(grid, &f));
        let u_eps = solve_relaxed(&case.a_eps, &case.mu_eps, &load, &case.mesh, params)?;
        let u0 = solve_relaxed(a0, mu0, &load, &case.mesh, params)?;
        rows.push(probe_row(case.eps, &u_eps, &case.a_eps, &u0, a0)?);
    }
    Ok(rows)
}
