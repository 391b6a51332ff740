use alloc::string::String;

/// Errors raised by the mining algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid language code `{0}`")]
    InvalidLanguage(String),

    #[error("language `{0}` is not registered in the run configuration")]
    UnregisteredLanguage(String),

    #[error("cannot normalize an all-zero vector")]
    ZeroVector,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("dimension {dim} is not divisible by {m} subspaces")]
    DimensionNotDivisible { dim: usize, m: usize },

    #[error("insufficient data: need at least {required} vectors, got {available}")]
    InsufficientData { required: usize, available: usize },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("unknown id `{0}`")]
    UnknownId(String),

    #[error("index is empty")]
    EmptyIndex,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("input series have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    #[error("language detector unavailable: {0}")]
    DetectorUnavailable(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
