use thiserror::Error;

/// Errors produced by the certification toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension too small: {0}")]
    DimensionTooSmall(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NonHermitianInput { deviation: f64 },

    #[error("malformed Pauli term: {0}")]
    MalformedTerm(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("unknown name: {0}")]
    UnknownName(String),

    #[error("invalid bipartition: {0}")]
    InvalidBipartition(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("dual audit failed: sampled objective exceeds the dual value by {excess:.3e}")]
    DualViolation { excess: f64, state: Vec<(f64, f64)> },

    #[error("linear program failed: {0}")]
    Solver(String),

    #[error("record format error: {0}")]
    Record(String),
}

pub type Result<T> = std::result::Result<T, Error>;
