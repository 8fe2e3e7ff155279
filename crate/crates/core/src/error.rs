use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch { context: &'static str, expected: usize, found: usize },

    #[error("non-finite entry {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("empty vector")]
    Empty,

    #[error("operator is not symmetric positive definite")]
    NotSpd,

    #[error("{operation} is not available for {kind}; supported kinds: {supported}")]
    Unsupported { operation: &'static str, kind: String, supported: &'static str },

    #[error("{kind} is not differentiable")]
    NotDifferentiable { kind: String },

    #[error("membership undecidable at infinite value ({0})")]
    InfiniteValue(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("local solve failed on block {block} at iteration {iteration}: {reason}")]
    LocalSolve { block: usize, iteration: usize, reason: String },

    #[error("inner solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("trace length mismatch: primal has {primal} records, dual has {dual}")]
    TraceLengthMismatch { primal: usize, dual: usize },

    #[error("initial configuration does not satisfy the hypothesis `{relation}` (residual {residual:.3e})")]
    InitialMismatch { relation: String, residual: f64 },

    #[error("missing trace entry `{0}`")]
    MissingState(String),

    #[error("malformed input at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
