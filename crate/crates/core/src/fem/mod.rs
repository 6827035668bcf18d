//! Structured-grid finite elements for relaxed Dirichlet problems.

pub mod assembly;
pub mod element;
pub mod field;
pub mod mesh;
pub mod norms;
pub mod solver;
pub mod sparse;

pub use assembly::{assemble, assemble_with, lumped_mass, SparseSystem};
pub use element::ReferenceCell;
pub use field::NodalField;
pub use mesh::{build_mesh, build_mesh_cells, classify_holes, ElementKind, Grid, Mesh, NodeClass};
pub use norms::{energy_seminorm, h1_l2_errors, weighted_mass};
pub use solver::{reaction_forces, solve, solve_with_stats, Preconditioner, SolveStats, SolverParams};
pub use sparse::CsrMatrix;
