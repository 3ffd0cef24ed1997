use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("sample count {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("derivative order must be at least 1")]
    InvalidOrder,

    #[error("degenerate curve: min jacobian {min:e} is below 1e-12 x max jacobian {max:e}")]
    DegenerateCurve { min: f64, max: f64 },

    #[error("curve is traversed clockwise (signed area {0:e})")]
    Orientation(f64),

    #[error("{0}")]
    InvalidArgument(String),

    #[error("source and target points coincide")]
    CoincidentPoints,

    #[error("{n} nodes is below the minimum of {min} for the singular quadrature rule")]
    TooFewNodes { n: usize, min: usize },

    #[error("closest-point projection is ambiguous (g'' = {0:e})")]
    AmbiguousProjection(f64),

    #[error("near-singular stencil for target {target} crosses the source curve; refine the source")]
    StencilCrossing { target: usize },

    #[error("GMRES stopped after {iterations} iterations at relative residual {residual:e}")]
    GmresNotConverged { iterations: usize, residual: f64 },

    #[error("singular block in the preconditioner ({0})")]
    SingularBlock(String),

    #[error("time step {dt:e} fell below the floor {floor:e} after repeated collisions")]
    TimeStepUnderflow { dt: f64, floor: f64 },

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
