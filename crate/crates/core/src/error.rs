use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate perforation geometry: {0}")]
    DegenerateGeometry(String),

    #[error("mesh spacing h={h} does not fit the domain: {reason}")]
    BadMesh { h: f64, reason: String },

    #[error("mesh has not been classified against a perforation lattice")]
    UnclassifiedMesh,

    #[error("fields live on different meshes")]
    MeshMismatch,

    #[error("negative measure density {value} at node {node}")]
    NegativeDensity { node: usize, value: f64 },

    #[error("operator is not positive definite (curvature {curvature:e} at iteration {iteration})")]
    NotPositiveDefinite { iteration: usize, curvature: f64 },

    #[error("conjugate gradients stopped after {iterations} iterations with relative residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("field is not a solution of the system (relative free residual {residual:e})")]
    NotASolution { residual: f64 },

    #[error("coarse-graining window {window} is smaller than the period {eps}")]
    WindowTooSmall { window: f64, eps: f64 },

    #[error("holes are under-resolved: r_hole/h = {ratio:.3} < {required}")]
    UnderResolved { ratio: f64, required: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
