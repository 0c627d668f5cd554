use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("no windows of length {order} in the data")]
    NoWindows { order: usize },
    #[error("smoothing constant must be >= 0, got {0}")]
    InvalidSmoothing(f64),
    #[error("unseen context {context:?}")]
    UnseenContext { context: Vec<usize> },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("probabilities sum to {sum}, expected 1")]
    Normalization { sum: f64 },
    #[error("id {id} out of range for {classes} classes")]
    IdOutOfRange { id: usize, classes: usize },
    #[error("row {row} of the transition table sums to {sum}")]
    NonStochastic { row: usize, sum: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite input value")]
    NonFinite,
    #[error("dataset has no labels")]
    MissingLabels,
    #[error("need at least 2 sequences to split, have {0}")]
    TooFewSequences(usize),
    #[error("order mismatch: expected {expected}, found {found}")]
    OrderMismatch { expected: usize, found: usize },
    #[error("dual variable {index} is {value}, must be strictly negative")]
    NonNegativeDual { index: usize, value: f64 },
    #[error("enumeration of {size} output sequences exceeds the bound")]
    EnumerationBound { size: f64 },
    #[error("table of {size} entries is too large for dense storage")]
    TableTooLarge { size: f64 },
    #[error("divergence at step {step}: {what}")]
    Divergence { step: usize, what: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
