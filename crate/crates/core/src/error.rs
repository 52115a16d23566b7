use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("protocol violation at step {step}: {reason}")]
    ProtocolViolation { step: usize, reason: String },
    #[error("instance too small: {0}")]
    InstanceTooSmall(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("dataset line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("incompatible trace: {0}")]
    IncompatibleTrace(String),
    #[error("refusing to run without a step or time bound")]
    Unbounded,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
