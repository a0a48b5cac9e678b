use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("duplicate system label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown system label `{0}`")]
    UnknownLabel(String),
    #[error("system `{label}` has dimension {found}, expected {expected}")]
    DimensionMismatch {
        label: String,
        expected: usize,
        found: usize,
    },
    #[error("dimension must be at least 1 (got {0})")]
    InvalidDimension(usize),
    #[error("requested order is not a permutation of the operator's systems")]
    NotAPermutation,
    #[error("matrix is {rows}x{cols} but the systems require side {expected}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        expected: usize,
    },
    #[error("operator is not Hermitian (Frobenius deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("operator has a negative eigenvalue {0:.3e}")]
    NotPositive(f64),
    #[error("operator trace is {found:.12}, expected {expected}")]
    TraceMismatch { expected: f64, found: f64 },
    #[error("state is not pure (purity {0:.12})")]
    NotPure(f64),
    #[error("map is not trace preserving (deviation {0:.3e})")]
    NotTracePreserving(f64),
    #[error("parameter `{name}` = {value} is out of range")]
    ParameterOutOfRange { name: &'static str, value: f64 },
    #[error("normalization mismatch: {0}")]
    Normalization(String),
    #[error("composition error: {0}")]
    Composition(String),
    #[error("party table error: {0}")]
    PartyTable(String),
    #[error("merge rejected: {0}")]
    MergeRejected(String),
    #[error("dimension cap exceeded: {found} > {cap}")]
    DimensionCap { found: usize, cap: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("network error: {0}")]
    Network(String),
    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
