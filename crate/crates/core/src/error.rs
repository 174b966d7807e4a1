use thiserror::Error;

/// Errors raised anywhere in the certification pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(usize),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("operator is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),

    #[error("invalid counts: {0}")]
    InvalidCounts(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("seed exhausted: needed more than the {available} bits available")]
    InsufficientSeed { available: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("enumeration budget exceeded ({compositions} compositions > {budget}); use Monte Carlo mode")]
    OverBudget { compositions: u128, budget: u128 },

    #[error("no positive rate: asymptotic rate {0} ≤ 0")]
    NoPositiveRate(f64),

    #[error("certificate is non-positive (b_sec = {0}); refusing to extract")]
    NothingCertified(f64),

    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),

    #[error("malformed data: {0}")]
    Malformed(String),

    #[error("input too short: need {needed}, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
