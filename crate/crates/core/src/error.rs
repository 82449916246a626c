use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("infeasible geometry: {0}")]
    InfeasibleGeometry(String),

    #[error("degenerate cell {index}: signed volume {volume:e}")]
    DegenerateCell { index: usize, volume: f64 },

    #[error("mesh invariant `{invariant}` violated: {detail}")]
    MeshInvariant {
        invariant: &'static str,
        detail: String,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("coefficient validation failed: {0}")]
    Coefficient(String),

    #[error("potential decay violated at |x| = {radius}: ratio {ratio}")]
    DecayViolation { radius: f64, ratio: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("point ({x:.6}, {y:.6}, {z:.6}) lies outside the mesh")]
    OutsideMesh { x: f64, y: f64, z: f64 },

    #[error("singular factorization (k = {k}, eps = {eps}): {detail}")]
    SingularSystem { k: f64, eps: f64, detail: String },

    #[error("{method} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("a priori bound proxy violated: max norm {max} > 10 x median {median}")]
    AprioriBound { max: f64, median: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the command-line tool: 2 for user input
    /// problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InfeasibleGeometry(_)
            | Error::Parse { .. }
            | Error::MeshInvariant { .. }
            | Error::Coefficient(_)
            | Error::DecayViolation { .. }
            | Error::Hypothesis(_)
            | Error::InvalidArgument(_)
            | Error::Config(_)
            | Error::Io(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
