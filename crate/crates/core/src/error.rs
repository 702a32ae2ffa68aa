use thiserror::Error;

/// Errors produced by the ranking, mechanism, audit, attack and learning APIs.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("not a permutation of 1..={m}: {reason}")]
    NotAPermutation { m: usize, reason: String },
    #[error("ranking must contain at least 2 items, got {0}")]
    TooShort(usize),
    #[error("size mismatch: expected {expected} items, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("m = {m} exceeds the enumeration cap of {cap}")]
    CapExceeded { m: usize, cap: usize },
    #[error("stage {t} is outside 2..={m}")]
    StageOutOfRange { t: usize, m: usize },
    #[error("invalid epsilon {0}: must be finite and > 0 (or +inf for pass-through)")]
    InvalidEpsilon(f64),
    #[error("invalid Laplace scale {0}: must be > 0")]
    InvalidScale(f64),
    #[error("score at item {0} is not finite")]
    NonFiniteScore(usize),
    #[error("sample count must be positive")]
    ZeroSamples,
    #[error("attack sample is empty")]
    EmptySample,
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("bad dimensions: {0}")]
    BadDimensions(String),
    #[error("loss is not finite")]
    NonFiniteLoss,
    #[error("training diverged at epoch {0}")]
    Diverged(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown item id {id} at line {line}")]
    UnknownItemId { id: String, line: usize },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
