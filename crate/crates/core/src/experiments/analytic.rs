use std::f64::consts::PI;

use super::config::RunConfig;
use super::report::{Cell, Check, ConvergenceReport};
use crate::error::Result;
use crate::example6::{
    cell_energy_closed_form, cell_energy_quadrature, energy_bound_check, lambda_pairing, RadialCell, SphereClipping,
};
use crate::problem_model::{c_eps, mu0_prediction, Domain, PerforationLattice, Point};

/// Quadrature against closed-form cell energy.
pub const QUAD_TOL: f64 = 1e-3;
/// Tolerance for the constant test function.
pub const ONE_TOL: f64 = 0.02;
/// Largest `eps` at which the constant and bump checks apply.
pub const ONE_EPS: f64 = 1.0 / 32.0;
pub const BUMP_EPS: f64 = 1.0 / 16.0;

pub const COLUMNS: &[&str] = &[
    "eps",
    "c_eps",
    "cell_energy_closed",
    "cell_energy_quad",
    "quad_rel_gap",
    "n_eps",
    "n_interior",
    "energy_lhs",
    "energy_rhs",
    "energy_bound_holds",
    "lambda_one",
    "lambda_one_rel_dev",
    "lambda_bump",
    "bump_integral",
    "lambda_bump_rel_dev",
    "mu0",
];

/// `prod_k sin^2(pi s_k)` on the inner half-box (local coordinates `s`),
/// zero elsewhere. Its integral is `meas(Omega) / 4^n`.
pub fn bump(domain: &Domain) -> impl Fn(&Point) -> f64 + Sync + '_ {
    let inner = domain.scaled(0.5);
    move |x: &Point| {
        if !inner.contains(x) {
            return 0.0;
        }
        (0..domain.dim)
            .map(|k| (PI * (x[k] - inner.lower[k]) / inner.edge(k)).sin().powi(2))
            .product()
    }
}

fn opt(v: Option<f64>) -> Cell {
    v.filter(|x| x.is_finite()).map_or(Cell::Missing, Cell::Num)
}

/// Closed-form cell quantities and the surface-measure limit by lattice
/// quadrature, without any finite element solve.
pub fn run_example6_analytic(config: &RunConfig) -> Result<ConvergenceReport> {
    let domain = config.domain()?;
    let n = config.dim;
    let mu0 = mu0_prediction(config.b, n)?;
    let phi = bump(&domain);
    let bump_integral = domain.measure() / 4f64.powi(n as i32);
    let mut report = ConvergenceReport::new(config, COLUMNS);
    for &eps in &config.eps_list {
        let lattice = PerforationLattice::new(eps, config.gamma, n)?;
        let closed = cell_energy_closed_form(eps, n, config.gamma)?;
        let quad = cell_energy_quadrature(&RadialCell::from_lattice(&lattice, [0.0; 3]), config.radial_points)?;
        let bound = energy_bound_check(&lattice, &domain)?;
        let (one, bumped) = if n == 3 {
            let one = lambda_pairing(&lattice, &domain, |_| 1.0, config.b, config.sphere_points, SphereClipping::Clipped)?;
            let bumped = lambda_pairing(&lattice, &domain, &phi, config.b, config.sphere_points, SphereClipping::Clipped)?;
            (Some(one), Some(bumped))
        } else {
            (None, None)
        };
        report.push_row(vec![
            eps.into(),
            c_eps(eps, n, config.gamma)?.into(),
            closed.into(),
            quad.into(),
            (quad / closed - 1.0).abs().into(),
            bound.n_eps.into(),
            bound.n_interior.into(),
            bound.lhs.into(),
            bound.rhs.into(),
            (bound.lhs <= bound.rhs * (1.0 + 1e-12)).into(),
            opt(one),
            opt(one.map(|v| v / (mu0 * domain.measure()) - 1.0)),
            opt(bumped),
            bump_integral.into(),
            opt(bumped.map(|v| v / (mu0 * bump_integral) - 1.0)),
            mu0.into(),
        ]);
    }

    let eps = report.values("eps");
    let gaps = report.values("quad_rel_gap");
    let one_devs = report.values("lambda_one_rel_dev");
    let bump_devs = report.values("lambda_bump_rel_dev");
    let holds = report.column("energy_bound_holds").expect("known column");
    let bound_ok = report.rows.iter().all(|r| r[holds].as_flag() == Some(true));
    let mut checks = vec![
        Check::new(
            "quadrature_matches_closed_form",
            gaps.iter().all(|g| g.is_some_and(|g| g <= QUAD_TOL)),
            format!("relative gaps {gaps:?} (tol {QUAD_TOL})"),
        ),
        Check::new("energy_bound", bound_ok, "int |D omega|^2 <= N cell energy for every eps"),
    ];
    let windowed = |name: &str, devs: &[Option<f64>], max_eps: f64, tol: f64| {
        let picked: Vec<(f64, Option<f64>)> = eps
            .iter()
            .zip(devs)
            .filter(|(e, _)| e.is_some_and(|e| e <= max_eps * (1.0 + 1e-12)))
            .map(|(e, d)| (e.unwrap_or(f64::NAN), *d))
            .collect();
        (!picked.is_empty()).then(|| {
            let pass = picked.iter().all(|(_, d)| d.is_some_and(|d| d.abs() <= tol));
            Check::new(name, pass, format!("(eps, deviation) {picked:?} (tol {tol})"))
        })
    };
    checks.extend(windowed("lambda_constant", &one_devs, ONE_EPS, ONE_TOL));
    checks.extend(windowed("lambda_bump", &bump_devs, BUMP_EPS, config.tol));
    report.checks = checks;
    Ok(report)
}
