use thiserror::Error;

/// Errors produced by releases, queries, audits and file ingestion.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix decomposition did not converge")]
    NoConvergence,

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid cut query: {0}")]
    InvalidQuery(String),

    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error("graph too small for these privacy parameters: w/n = {w_over_n:.4} >= 1/2 with n = {n}, need n >= {min_n}")]
    GraphTooSmall { n: usize, min_n: usize, w_over_n: f64 },

    #[error("privacy parameters too weak: w = {w:.4} <= 2")]
    ParametersTooWeak { w: f64 },

    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),

    #[error("point lies outside the support (residual {residual:.3e})")]
    OutOfSupport { residual: f64 },

    #[error("audit precondition failed: {0}")]
    AuditPrecondition(String),

    #[error("inputs are not neighbors: {0}")]
    NotNeighbors(String),

    #[error("allocation of {needed} bytes exceeds the budget of {budget} bytes")]
    AllocationBudget { needed: u64, budget: u64 },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn out_of_range(msg: impl Into<String>) -> Error {
    Error::ParameterOutOfRange(msg.into())
}
