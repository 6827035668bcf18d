//! Relaxed problems, special test functions, correctors and the extraction
//! of the limit measure from reaction forces.

pub mod comparison;
pub mod corrector;
pub mod probe;
pub mod relaxed;
pub mod strange_term;

pub use comparison::{comparison_bounds_check, ComparisonReport};
pub use corrector::{
    build_corrector, choose_psi_delta, corrector_error, solve_corrector_z, CorrectorError, CorrectorSet, PsiChoice,
};
pub use probe::{h_convergence_probe, probe_row, ProbeCase, ProbeRow};
pub use relaxed::{reaction_measure, solve_relaxed, solve_w, w_and_reactions, WSolve};
pub use strange_term::{extract_strange_term, StrangeTermEstimate, WindowRecord};
