use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a mathematical precondition.
    #[error("domain error: {0}")]
    Domain(String),
    /// An exact computation would exceed the enumeration cap.
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
