use thiserror::Error;

/// Errors raised by the oracle, the hash families and the recovery schemes.
///
/// Recovery failures (`NoSignal`, `OutOfRange`, `EmptySelection`,
/// `Unresolved`) are ordinary outcomes of a randomized trial; callers
/// usually count them against the failure probability rather than abort.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("signal must have at least one coordinate")]
    EmptySignal,
    #[error("non-finite value at position {0}")]
    NonFinite(usize),
    #[error("index {index} out of range for dimension {dimension}")]
    IndexOutOfRange { index: usize, dimension: usize },
    #[error("index {0} appears twice in one query")]
    DuplicateIndex(usize),
    #[error("query batch must contain at least one query")]
    EmptyBatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("measurement carried no signal (|a| below the division guard)")]
    NoSignal,
    #[error("decoded position {position} outside [1, {limit}]")]
    OutOfRange { position: i64, limit: usize },
    #[error("decoded bucket holds no active coordinate")]
    EmptySelection,
    #[error("candidate set still has {0} elements when the schedule ran out")]
    Unresolved(usize),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// True for the per-trial failures a randomized scheme is allowed to hit.
    pub fn is_recovery_failure(&self) -> bool {
        matches!(
            self,
            Error::NoSignal
                | Error::OutOfRange { .. }
                | Error::EmptySelection
                | Error::Unresolved(_)
        )
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
