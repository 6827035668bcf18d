use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::assembly::{assemble_operator, lumped_mass, vector_load, SparseSystem};
use crate::fem::mesh::mesh_from_grid;
use crate::fem::norms::{energy_seminorm_in, gradient_sq_norm_in, nodal_gradient, weighted_mass};
use crate::fem::{solve_with_stats, Mesh, NodalField, NodeClass, SolverParams};
use crate::problem_model::{CoefficientField, CoefficientSource, Domain, MeasureSpec, MAX_DIM};

/// Oscillating test functions `z_j` for one coefficient field, restricted to
/// the working domain.
#[derive(Debug, Clone)]
pub struct CorrectorSet {
    pub eps: f64,
    pub z: Vec<NodalField>,
    pub a_eps: CoefficientField,
    pub a0: CoefficientField,
    pub margin: usize,
    pub sup_norms: Vec<f64>,
    /// `int_Omega |Dz_j|^2`.
    pub h1_seminorms: Vec<f64>,
}

impl CorrectorSet {
    /// Solves for every `z_j` on `Omega` padded by `margin` cells.
    pub fn solve(
        a_eps: &CoefficientField,
        a0: &CoefficientField,
        eps: f64,
        mesh: &Mesh,
        margin: usize,
        params: &SolverParams,
    ) -> Result<Self> {
        if margin < 2 {
            return Err(Error::InvalidParameter(format!("corrector margin must be at least 2 cells, got {margin}")));
        }
        let omega = mesh.grid.domain;
        let padded = mesh_from_grid(mesh.grid.padded(margin));
        let mut z = Vec::new();
        let mut sup_norms = Vec::new();
        let mut h1_seminorms = Vec::new();
        for j in 0..mesh.grid.dim() {
            let zj = solve_corrector_z(a_eps, a0, j, &padded, &omega, params)?.restrict_to(&mesh.grid)?;
            sup_norms.push(zj.max_abs());
            h1_seminorms.push(gradient_sq_norm_in(&zj, None));
            z.push(zj);
        }
        Ok(Self { eps, z, a_eps: a_eps.clone(), a0: a0.clone(), margin, sup_norms, h1_seminorms })
    }

    /// All-zero correctors on `mesh` (used when `A_eps = A0`).
    pub fn trivial(a0: &CoefficientField, eps: f64, mesh: &Mesh) -> Self {
        let dim = mesh.grid.dim();
        Self {
            eps,
            z: vec![NodalField::zeros(mesh.grid); dim],
            a_eps: a0.clone(),
            a0: a0.clone(),
            margin: 0,
            sup_norms: vec![0.0; dim],
            h1_seminorms: vec![0.0; dim],
        }
    }
}

/// `z_j` in `H^1_0(Omega')` with `int A Dz.Dy = int (A0 - A) e_j . Dy`, both
/// coefficients extended by `alpha I` of `a_eps` outside `omega`.
pub fn solve_corrector_z(
    a_eps: &CoefficientField,
    a0: &CoefficientField,
    j: usize,
    padded: &Mesh,
    omega: &Domain,
    params: &SolverParams,
) -> Result<NodalField> {
    let grid = padded.grid;
    let dim = grid.dim();
    if j >= dim {
        return Err(Error::InvalidParameter(format!("axis {j} out of range for dimension {dim}")));
    }
    for k in 0..dim {
        let lo = (omega.lower[k] - grid.domain.lower[k]) / grid.h;
        let hi = (grid.domain.upper[k] - omega.upper[k]) / grid.h;
        if lo < 2.0 - 1e-9 || hi < 2.0 - 1e-9 {
            return Err(Error::InvalidParameter("enlarged domain needs a margin of at least 2 cells".into()));
        }
    }
    let ext_eps = a_eps.extended_outside(*omega);
    let ext_0 = a0.extended_by(*omega, a_eps.alpha);
    let matrix = assemble_operator(&grid, &ext_eps, None, params.execution);
    let rhs = vector_load(&grid, |x| {
        let (m0, me) = (ext_0.matrix_at(x, dim), ext_eps.matrix_at(x, dim));
        let mut f = [0.0; MAX_DIM];
        for (k, fk) in f.iter_mut().enumerate().take(dim) {
            *fk = m0.m[k][j] - me.m[k][j];
        }
        f
    });
    let constrained = (0..grid.num_nodes()).map(|i| grid.is_outer_boundary(i)).collect();
    let system = SparseSystem { grid, matrix, rhs, constrained, fixed_values: vec![0.0; grid.num_nodes()] };
    Ok(solve_with_stats(&system, params)?.0)
}

/// `v = (psi + sum_j D_j psi z_j) omega`.
pub fn build_corrector(psi: &NodalField, correctors: &CorrectorSet, omega: &NodalField) -> Result<NodalField> {
    psi.check_same_grid(omega)?;
    for z in &correctors.z {
        psi.check_same_grid(z)?;
    }
    let grad = nodal_gradient(psi);
    let values = (0..psi.len())
        .map(|i| {
            let s: f64 = grad.iter().zip(&correctors.z).map(|(g, z)| g.values[i] * z.values[i]).sum();
            (psi.values[i] + s) * omega.values[i]
        })
        .collect();
    Ok(NodalField { grid: psi.grid, values })
}

/// A constructed `psi` and the attained value of
/// `beta int |D(u0 - psi w0)|^2 + int |u0 - psi w0|^2 dmu0`.
#[derive(Debug, Clone)]
pub struct PsiChoice {
    pub psi: NodalField,
    pub attained: f64,
}

fn box_filter(u: &NodalField, r: usize) -> NodalField {
    let grid = u.grid;
    let n = grid.nodes_per_axis();
    let strides = grid.strides();
    let mut cur = u.values.clone();
    for a in 0..grid.dim() {
        let next: Vec<f64> = (0..cur.len())
            .map(|p| {
                let i = grid.node_ijk(p)[a];
                let lo = i.saturating_sub(r);
                let hi = (i + r).min(n[a] - 1);
                let base = p - i * strides[a];
                (lo..=hi).map(|k| cur[base + k * strides[a]]).sum::<f64>() / (hi - lo + 1) as f64
            })
            .collect();
        cur = next;
    }
    for (p, v) in cur.iter_mut().enumerate() {
        if grid.is_outer_boundary(p) {
            *v = 0.0;
        }
    }
    NodalField { grid, values: cur }
}

/// `psi = mollify(u0 / max(omega0, theta))` with a tensor box filter of
/// half-width `radius` (rounded to whole cells).
pub fn choose_psi_delta(
    u0: &NodalField,
    omega0: &NodalField,
    theta: f64,
    radius: f64,
    beta: f64,
    mu0: &MeasureSpec,
    mesh: &Mesh,
) -> Result<PsiChoice> {
    u0.check_same_grid(omega0)?;
    if !(theta > 0.0) || !(radius >= 0.0) {
        return Err(Error::InvalidParameter(format!("need theta > 0 and radius >= 0, got {theta}, {radius}")));
    }
    if omega0.min() < 0.0 {
        return Err(Error::InvalidParameter("omega0 must be nonnegative".into()));
    }
    let ratio = NodalField {
        grid: u0.grid,
        values: u0.values.iter().zip(&omega0.values).map(|(u, w)| u / w.max(theta)).collect(),
    };
    let r = (radius / u0.grid.h).round() as usize;
    let psi = if r == 0 { ratio } else { box_filter(&ratio, r) };
    let diff = u0.sub(&psi.mul(omega0)?)?;
    let attained = beta * gradient_sq_norm_in(&diff, None) + weighted_mass(mesh, &diff, &diff, mu0)?;
    Ok(PsiChoice { psi, attained })
}

/// The two terms `alpha int |D(u - v)|^2` and `int |u - v|^2 dmu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrectorError {
    pub energy: f64,
    pub measure: f64,
}

impl CorrectorError {
    pub fn total(&self) -> f64 {
        self.energy + self.measure
    }
}

/// Corrector error over `Omega`, or over the cells and nodes of `region`.
/// For hole constraints the measure term is the lumped `L^2` mass of the
/// difference on the hole nodes.
pub fn corrector_error(
    u_eps: &NodalField,
    v: &NodalField,
    a_eps: &CoefficientField,
    mu_eps: &MeasureSpec,
    mesh: &Mesh,
    region: Option<&Domain>,
) -> Result<CorrectorError> {
    u_eps.check_same_grid(v)?;
    if !u_eps.grid.same_as(&mesh.grid) {
        return Err(Error::MeshMismatch);
    }
    let diff = u_eps.sub(v)?;
    let energy = a_eps.alpha * gradient_sq_norm_in(&diff, region);
    let grid = mesh.grid;
    let in_region = |i: usize| region.is_none_or(|r| r.contains(&grid.node_point(i)));
    let measure = match mu_eps {
        MeasureSpec::Zero => 0.0,
        MeasureSpec::HoleDirichlet(_) => {
            let mass = lumped_mass(&grid);
            (0..grid.num_nodes())
                .filter(|&i| mesh.node_class[i] == NodeClass::HoleInterior && in_region(i))
                .map(|i| mass[i] * diff.values[i].powi(2))
                .sum()
        }
        _ => {
            if region.is_none() {
                weighted_mass(mesh, &diff, &diff, mu_eps)?
            } else {
                let masked = NodalField {
                    grid,
                    values: (0..grid.num_nodes()).map(|i| if in_region(i) { diff.values[i] } else { 0.0 }).collect(),
                };
                weighted_mass(mesh, &masked, &masked, mu_eps)?
            }
        }
    };
    Ok(CorrectorError { energy, measure })
}

/// `int A Du.Du` over `region`, exposed for reports.
pub fn energy_in<C: CoefficientSource>(u: &NodalField, coef: &C, region: Option<&Domain>) -> f64 {
    energy_seminorm_in(u, coef, region)
}
