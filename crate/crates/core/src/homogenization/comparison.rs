use serde::Serialize;

use crate::error::{Error, Result};

/// Cellwise check of `(alpha/beta)^2 mu2 <= mu1 <= (beta/alpha)^2 mu2`.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub lower_factor: f64,
    pub upper_factor: f64,
    pub tol: f64,
    pub cell_pass: Vec<bool>,
    /// Extremes of `mu1 / mu2` over cells with `mu2 > 0`.
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub pass: bool,
}

impl ComparisonReport {
    pub fn failures(&self) -> usize {
        self.cell_pass.iter().filter(|p| !**p).count()
    }
}

/// Both sides may be single values (length 1, broadcast) or cellwise
/// densities of equal length. A cell passes when
/// `(1 + tol) mu1 >= r mu2` and `r mu1 <= (1 + tol) mu2` with `r = (alpha/beta)^2`.
pub fn comparison_bounds_check(mu1: &[f64], mu2: &[f64], alpha: f64, beta: f64, tol: f64) -> Result<ComparisonReport> {
    if !(alpha > 0.0 && alpha <= beta) || !(tol >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "comparison needs 0 < alpha <= beta and tol >= 0, got {alpha}, {beta}, {tol}"
        )));
    }
    let n = mu1.len().max(mu2.len());
    let ok_len = |v: &[f64]| v.len() == n || v.len() == 1;
    if n == 0 || !ok_len(mu1) || !ok_len(mu2) {
        return Err(Error::InvalidParameter(format!("density lengths {} and {} differ", mu1.len(), mu2.len())));
    }
    let at = |v: &[f64], i: usize| if v.len() == 1 { v[0] } else { v[i] };
    let r = (alpha / beta).powi(2);
    let slack = 1.0 + tol;
    let mut cell_pass = Vec::with_capacity(n);
    let (mut min_ratio, mut max_ratio) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let (a, b) = (at(mu1, i), at(mu2, i));
        cell_pass.push(slack * a >= r * b && r * a <= slack * b);
        if b > 0.0 {
            min_ratio = min_ratio.min(a / b);
            max_ratio = max_ratio.max(a / b);
        }
    }
    let pass = cell_pass.iter().all(|p| *p);
    Ok(ComparisonReport { lower_factor: r, upper_factor: 1.0 / r, tol, cell_pass, min_ratio, max_ratio, pass })
}
