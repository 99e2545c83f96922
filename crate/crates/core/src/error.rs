use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("graph of order {order} exceeds the brute-force cutoff {cutoff}")]
    UnsupportedSize { order: usize, cutoff: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} = {value} lies outside its domain")]
    OutOfDomain { what: &'static str, value: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("roots induce the root type with zero probability density")]
    DegenerateRoots,

    #[error("root type has zero mass in this graphon ({0})")]
    ZeroMass(String),

    #[error("incompatible rooted terms: {0}")]
    Incompatible(String),

    #[error("partition mismatch: {0}")]
    PartitionMismatch(String),

    #[error("work budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numeric check failed: {0}")]
    CheckFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
