use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("singular pair: |1 + mu.conj(nu)| = {modulus:e} is below the admissibility threshold")]
    SingularPair { modulus: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("finite-difference stencil produced a non-finite value at {0}")]
    DerivativeFailure(String),

    #[error("quadrature would need {requested} nodes, above the cap of {cap}")]
    ResourceLimit { requested: usize, cap: usize },

    #[error("integrand is not finite at node {node} ({point})")]
    NonFiniteIntegrand { node: usize, point: String },

    #[error("multi-index of degree {degree} is out of range for level m = {m}")]
    IndexOutOfRange { degree: u32, m: u32 },

    #[error("kernel is degenerate at the requested pair (normalized pairing {0:e})")]
    DegenerateKernel(f64),

    #[error("point is outside the chart domain: {0}")]
    OutOfDomain(String),

    #[error("level m = {0} is odd; torus holonomy requires an even level")]
    OddLevel(u32),

    #[error("path sampling too coarse: refinement changed the integral by {0:e}")]
    PathTooCoarse(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
