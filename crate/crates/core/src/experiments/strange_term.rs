use super::config::{cells_for_eps, RunConfig};
use super::report::{improved_over_previous, strictly_decreasing, Cell, Check, ConvergenceReport};
use crate::error::{Error, Result};
use crate::fem::{build_mesh_cells, classify_holes, lumped_mass, Mesh, NodalField};
use crate::homogenization::relaxed::solve_relaxed_with_stats;
use crate::homogenization::{extract_strange_term, w_and_reactions, StrangeTermEstimate, WSolve};
use crate::problem_model::{mu0_prediction, CoefficientField, Load, MeasureSpec, PerforationLattice};

/// Resolved geometry of one perforated run.
#[derive(Debug, Clone)]
pub struct PerforatedSetup {
    pub eps: f64,
    pub lattice: PerforationLattice,
    pub mesh: Mesh,
    pub cells: usize,
}

/// Lattice and classified mesh for `eps`; fails unless `r_hole / h >= 2`.
pub fn perforated_setup(config: &RunConfig, eps: f64) -> Result<PerforatedSetup> {
    let domain = config.domain()?;
    let lattice = PerforationLattice::new(eps, config.gamma, config.dim)?;
    let cells = cells_for_eps(config.grid, eps);
    let h = domain.edge(0) / cells as f64;
    let ratio = lattice.r_hole / h;
    if ratio < 2.0 - 1e-9 {
        return Err(Error::UnderResolved { ratio, required: 2.0 });
    }
    let mesh = classify_holes(&build_mesh_cells(&domain, cells, config.element)?, &lattice);
    Ok(PerforatedSetup { eps, lattice, mesh, cells })
}

/// Two-phase coefficient `a` off the outer balls and `b` on them.
pub fn two_phase(setup: &PerforatedSetup, a: f64, b: f64) -> Result<CoefficientField> {
    CoefficientField::two_phase(a, b, setup.lattice, a.min(b), a.max(b))
}

/// `w`, its reactions and the coarse-grained density for one `(a, b)` pair.
pub fn extract_for(config: &RunConfig, setup: &PerforatedSetup, a: f64, b: f64) -> Result<(WSolve, StrangeTermEstimate)> {
    let coef = two_phase(setup, a, b)?;
    let sol = w_and_reactions(&coef, &MeasureSpec::HoleDirichlet(setup.lattice), &setup.mesh, &config.solver())?;
    let est = extract_strange_term(&sol.nu, &sol.w, config.window * setup.eps, config.floor, setup.eps)?;
    Ok((sol, est))
}

pub fn lumped_l2_distance(u: &NodalField, v: &NodalField) -> Result<f64> {
    u.check_same_grid(v)?;
    let m = lumped_mass(&u.grid);
    Ok((0..m.len()).map(|i| m[i] * (u.values[i] - v.values[i]).powi(2)).sum::<f64>().sqrt())
}

pub const COLUMNS: &[&str] = &[
    "eps",
    "cells",
    "h",
    "r_hole_over_h",
    "holes_with_nodes",
    "iterations_w",
    "iterations_u0",
    "mu_hat_interior_mean",
    "mu_hat_interior_std",
    "interior_windows",
    "saturated_windows",
    "total_mass",
    "mu0_predicted",
    "mu_rel_dev",
    "l2_gap",
    "mu_within_tol",
    "mu_improving",
    "l2_decreasing",
];

/// Limit-measure extraction over `eps_list` with `f = 1`, so that `u_eps = w_eps`,
/// against `u0` solved with the predicted constant density on the same grid.
pub fn run_strange_term(config: &RunConfig) -> Result<ConvergenceReport> {
    let mu0 = mu0_prediction(config.b, config.dim)?;
    let a0 = CoefficientField::isotropic(config.a, config.dim)?;
    let mut report = ConvergenceReport::new(config, COLUMNS);
    let (mut devs, mut gaps) = (Vec::new(), Vec::new());
    for (i, &eps) in config.eps_list.iter().enumerate() {
        let setup = perforated_setup(config, eps)?;
        let (sol, est) = extract_for(config, &setup, config.a, config.b)?;
        let ones = Load::new(NodalField::constant(setup.mesh.grid, 1.0));
        let (u0, stats0) =
            solve_relaxed_with_stats(&a0, &MeasureSpec::ConstantDensity(mu0), &ones, &setup.mesh, &config.solver())?;
        let gap = lumped_l2_distance(&sol.w, &u0)?;
        let mean = est.interior_mean();
        let dev = mean / mu0 - 1.0;
        devs.push(dev.abs());
        gaps.push(gap);
        let holes = setup.mesh.holes.as_ref().map_or(0, |h| h.holes_with_nodes);
        report.push_row(vec![
            eps.into(),
            setup.cells.into(),
            setup.mesh.grid.h.into(),
            (setup.lattice.r_hole / setup.mesh.grid.h).into(),
            holes.into(),
            sol.stats.iterations.into(),
            stats0.iterations.into(),
            if mean.is_finite() { Cell::Num(mean) } else { Cell::Missing },
            if mean.is_finite() { Cell::Num(est.interior_std()) } else { Cell::Missing },
            est.interior_count().into(),
            est.saturated_count().into(),
            est.total_mass.into(),
            mu0.into(),
            if dev.is_finite() { Cell::Num(dev) } else { Cell::Missing },
            gap.into(),
            Cell::Flag(dev.abs() <= config.tol),
            improved_over_previous(&devs, i).into(),
            improved_over_previous(&gaps, i).into(),
        ]);
    }
    let last = report.rows.len() - 1;
    let last_dev = report.get(last, "mu_rel_dev").and_then(Cell::as_f64);
    report.checks.push(Check::new(
        "mu_within_tol",
        last_dev.is_some_and(|d| d.abs() <= config.tol),
        format!("relative deviation {:?} at eps={} (tol {})", last_dev, config.eps_list[last], config.tol),
    ));
    let abs_devs: Vec<Option<f64>> = report.values("mu_rel_dev").iter().map(|d| d.map(f64::abs)).collect();
    if let Some(pass) = strictly_decreasing(&abs_devs) {
        report.checks.push(Check::new("mu_improving", pass, format!("|deviation| {abs_devs:?}")));
    }
    if let Some(pass) = strictly_decreasing(&report.values("l2_gap")) {
        report.checks.push(Check::new("l2_decreasing", pass, format!("{:?}", report.values("l2_gap"))));
    }
    Ok(report)
}
