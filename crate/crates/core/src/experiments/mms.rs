use std::f64::consts::PI;

use super::config::RunConfig;
use super::report::{Cell, Check, ConvergenceReport};
use crate::error::Result;
use crate::fem::{assemble_with, build_mesh_cells, h1_l2_errors, solve_with_stats, NodalField};
use crate::problem_model::{CoefficientField, Domain, Load, MeasureSpec, Point, MAX_DIM};

pub const COLUMNS: &[&str] = &["h", "cells", "l2_error", "h1_error", "l2_rate", "h1_rate", "iterations", "status"];

/// `u* = prod_k sin(pi t_k)` in box coordinates.
fn exact(domain: &Domain) -> (impl Fn(&Point) -> f64 + Sync + '_, impl Fn(&Point) -> Point + Sync + '_) {
    let dim = domain.dim;
    let t = move |x: &Point, k: usize| (x[k] - domain.lower[k]) / domain.edge(k);
    let u = move |x: &Point| (0..dim).map(|k| (PI * t(x, k)).sin()).product::<f64>();
    let g = move |x: &Point| {
        let mut out = [0.0; MAX_DIM];
        for (a, o) in out.iter_mut().enumerate().take(dim) {
            *o = PI / domain.edge(a) * (PI * t(x, a)).cos();
            for k in (0..dim).filter(|k| *k != a) {
                *o *= (PI * t(x, k)).sin();
            }
        }
        out
    };
    (u, g)
}

/// Manufactured-solution refinement study of the relaxed problem with a
/// constant measure density.
pub fn run_mms(config: &RunConfig) -> Result<ConvergenceReport> {
    let domain = config.domain()?;
    let a = CoefficientField::isotropic(config.a, config.dim)?;
    let mu = MeasureSpec::ConstantDensity(config.mass);
    let params = config.solver();
    let (u, g) = exact(&domain);
    let lap_factor: f64 = (0..config.dim).map(|k| (PI / domain.edge(k)).powi(2)).sum();
    let scale = if config.negative_control { 2.0 } else { 1.0 };

    let mut report = ConvergenceReport::new(config, COLUMNS);
    let mut errors: Vec<Option<(f64, f64, f64)>> = Vec::new();
    for &cells in &config.levels {
        let mesh = build_mesh_cells(&domain, cells, config.element)?;
        let f = NodalField::from_fn(mesh.grid, |x| scale * (config.a * lap_factor + config.mass) * u(x));
        let system = assemble_with(&mesh, &a, &mu, &Load::new(f), params.execution)?;
        let h = mesh.grid.h;
        match solve_with_stats(&system, &params) {
            Ok((uh, stats)) => {
                let (e1, e0) = h1_l2_errors(&uh, &u, &g);
                let prev = errors.last().copied().flatten();
                let rate = |cur: f64, old: f64, h_old: f64| (old / cur).ln() / (h_old / h).ln();
                let l2_rate = prev.map(|(ho, _, e0o)| rate(e0, e0o, ho));
                let h1_rate = prev.map(|(ho, e1o, _)| rate(e1, e1o, ho));
                report.push_row(vec![
                    h.into(),
                    cells.into(),
                    e0.into(),
                    e1.into(),
                    l2_rate.into(),
                    h1_rate.into(),
                    stats.iterations.into(),
                    Cell::Text("ok".into()),
                ]);
                errors.push(Some((h, e1, e0)));
            }
            Err(e) => {
                report.push_row(vec![
                    h.into(),
                    cells.into(),
                    Cell::Missing,
                    Cell::Missing,
                    Cell::Missing,
                    Cell::Missing,
                    Cell::Missing,
                    Cell::Text(e.to_string()),
                ]);
                errors.push(None);
            }
        }
    }
    let within = |name: &str, target: f64| {
        let v = report.values(name);
        let rates: Vec<Option<f64>> = v.into_iter().skip(1).collect();
        let pass = !rates.is_empty() && rates.iter().all(|r| r.is_some_and(|r| (r - target).abs() <= config.tol));
        let shown: Vec<String> = rates.iter().map(|r| r.map_or("-".into(), |r| format!("{r:.3}"))).collect();
        (pass, format!("rates [{}], target {target} +- {}", shown.join(", "), config.tol))
    };
    let (p0, d0) = within("l2_rate", 2.0);
    let (p1, d1) = within("h1_rate", 1.0);
    report.checks.push(Check::new("l2_rate", p0, d0));
    report.checks.push(Check::new("h1_rate", p1, d1));
    Ok(report)
}
