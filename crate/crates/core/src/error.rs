use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("probability {value} for credential {index} is outside [0, 1]")]
    ProbabilityOutOfRange { index: usize, value: f64 },

    #[error("credential {index} probabilities sum to {sum}, expected 1")]
    RowSum { index: usize, sum: f64 },

    #[error("credential count {n} is outside the supported range 1..={max}")]
    CredentialCount { n: usize, max: usize },

    #[error("dimension mismatch: expected {expected} credentials, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("scenario is incompatible with the current truth table")]
    IncompatibleScenario,

    #[error("truth table is not complete")]
    IncompleteTable,

    #[error("truth table is not monotone: {0}")]
    NotMonotone(String),

    #[error("delta must lie in (0, 1), got {0}")]
    InvalidDelta(f64),

    #[error("node limit must be positive")]
    InvalidNodeLimit,

    #[error("strategy uses credentials {mask:#b} outside its availability vector {available:#b}")]
    MaskViolation { mask: u32, available: u32 },

    #[error("{0}")]
    OutOfBounds(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
