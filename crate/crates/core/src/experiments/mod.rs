//! Configured, reproducible runs with CSV/JSON reports.

pub mod analytic;
pub mod compare;
pub mod config;
pub mod corrector;
pub mod mms;
pub mod report;
pub mod strange_term;

use std::time::Instant;

pub use analytic::run_example6_analytic;
pub use compare::run_compare_measures;
pub use config::{cells_for_eps, CorrectorCase, Experiment, PartialConfig, RunConfig};
pub use corrector::run_corrector;
pub use mms::run_mms;
pub use report::{Cell, Check, ConvergenceReport};
pub use strange_term::run_strange_term;

use crate::error::{Error, Result};

/// Validates the configuration and dispatches to the matching pipeline.
pub fn run(config: &RunConfig) -> Result<ConvergenceReport> {
    config.validate()?;
    let start = Instant::now();
    let mut report = match config.experiment {
        Experiment::Mms => run_mms(config),
        Experiment::StrangeTerm => run_strange_term(config),
        Experiment::Corrector => run_corrector(config),
        Experiment::CompareMeasures => run_compare_measures(config),
        Experiment::Example6Analytic => run_example6_analytic(config),
    }?;
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Process exit status for a run outcome: 0 all checks pass, 1 a numeric
/// check failed, 2 configuration or resolution error.
pub fn exit_code(outcome: &Result<ConvergenceReport>) -> i32 {
    match outcome {
        Ok(report) => report.exit_code(),
        Err(
            Error::Config(_)
            | Error::UnderResolved { .. }
            | Error::InvalidParameter(_)
            | Error::DegenerateGeometry(_)
            | Error::BadMesh { .. }
            | Error::WindowTooSmall { .. }
            | Error::Io(_),
        ) => 2,
        Err(_) => 1,
    }
}
