use super::config::RunConfig;
use super::report::{Check, ConvergenceReport};
use super::strange_term::{extract_for, perforated_setup};
use crate::error::Result;
use crate::homogenization::comparison_bounds_check;

pub const COLUMNS: &[&str] = &[
    "eps",
    "mu1_interior_mean",
    "mu2_interior_mean",
    "ratio_2_over_1",
    "predicted_ratio",
    "ratio_rel_dev",
    "band_lower",
    "band_upper",
    "windows_checked",
    "windows_failed",
    "min_ratio",
    "max_ratio",
    "saturated_windows",
    "band_pass",
    "predicted_inside",
    "ratio_within_tol",
];

/// Paired extractions for `(a, b)` and `(a2, b2)` on the same geometry and a
/// windowwise check of the comparison band.
pub fn run_compare_measures(config: &RunConfig) -> Result<ConvergenceReport> {
    let mut report = ConvergenceReport::new(config, COLUMNS);
    let predicted = config.b2 / config.b;
    for &eps in &config.eps_list {
        let setup = perforated_setup(config, eps)?;
        let (_, est1) = extract_for(config, &setup, config.a, config.b)?;
        let (_, est2) = extract_for(config, &setup, config.a2, config.b2)?;
        // windows where either extraction hit the floor carry no information
        let kept: Vec<usize> =
            (0..est1.windows.len()).filter(|&i| !est1.windows[i].saturated && !est2.windows[i].saturated).collect();
        let mu1: Vec<f64> = kept.iter().map(|&i| est1.windows[i].mu_hat).collect();
        let mu2: Vec<f64> = kept.iter().map(|&i| est2.windows[i].mu_hat).collect();
        let band = comparison_bounds_check(&mu1, &mu2, config.alpha, config.beta, config.tol)?;
        let (m1, m2) = (est1.interior_mean(), est2.interior_mean());
        let ratio = m2 / m1;
        let dev = ratio / predicted - 1.0;
        // mu2/mu1 must lie in [r, 1/r]
        let inside = predicted > band.lower_factor && predicted < band.upper_factor;
        report.push_row(vec![
            eps.into(),
            m1.into(),
            m2.into(),
            ratio.into(),
            predicted.into(),
            dev.into(),
            band.lower_factor.into(),
            band.upper_factor.into(),
            kept.len().into(),
            band.failures().into(),
            band.min_ratio.into(),
            band.max_ratio.into(),
            (est1.windows.len() - kept.len()).into(),
            band.pass.into(),
            inside.into(),
            (dev.abs() <= config.tol).into(),
        ]);
    }
    let flags = |name: &str| -> Vec<bool> {
        let c = report.column(name).expect("known column");
        report.rows.iter().map(|r| r[c].as_flag().unwrap_or(false)).collect()
    };
    let band = flags("band_pass");
    let inside = flags("predicted_inside");
    let within = flags("ratio_within_tol");
    let ratios = report.values("ratio_2_over_1");
    report.checks.push(Check::new("band", band.iter().all(|p| *p), format!("per eps {band:?}")));
    report.checks.push(Check::new(
        "predicted_inside",
        inside.iter().all(|p| *p),
        format!("predicted mu2/mu1 = {predicted} against [(alpha/beta)^2, (beta/alpha)^2]"),
    ));
    report.checks.push(Check::new(
        "ratio_within_tol",
        within.last().copied().unwrap_or(false),
        format!("ratios {ratios:?}, predicted {predicted} (tol {})", config.tol),
    ));
    Ok(report)
}
