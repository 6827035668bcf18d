//! Finite-element laboratory for the homogenization of linear Dirichlet
//! problems whose operators and perforated domains vary at the same time.
//!
//! The crate is organised bottom-up:
//!
//! * [`problem_model`] holds domains, coefficient fields, perforation
//!   lattices, measures and loads, plus the closed-form constants of the
//!   periodic-holes example.
//! * [`fem`] discretises relaxed Dirichlet problems on structured grids and
//!   solves them with preconditioned conjugate gradients.
//! * [`homogenization`] builds test functions, correctors, reaction measures
//!   and the coarse-grained limit measure.
//! * [`example6`] evaluates the radial cell solutions and lattice sums of the
//!   periodic-holes example without any finite elements.
//! * [`experiments`] turns all of the above into reproducible runs with CSV
//!   and JSON reports.
//!
//! Data-parallel loops use rayon when the `rayon` feature is enabled (the
//! default) and fall back to plain iterators otherwise.

// Index loops mirror the formulas; negated comparisons reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod example6;
pub mod experiments;
pub mod fem;
pub mod homogenization;
pub mod par;
pub mod problem_model;

pub use error::{Error, Result};
