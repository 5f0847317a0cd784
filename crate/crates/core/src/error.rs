use thiserror::Error;

/// Errors raised by the solver and its substrate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate system: {0}")]
    Degenerate(String),
    /// All amplitudes are zero, so there is nothing to recover.
    #[error("measurement vector carries no signal (all amplitudes are zero)")]
    NoSignal,
    #[error("refused: {0}")]
    Refused(String),
    #[error("malformed instance file: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
