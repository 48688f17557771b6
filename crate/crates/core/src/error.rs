use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition (length mismatch, unknown label, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("model format: {0}")]
    Format(String),

    /// The series is already classified as the requested label.
    #[error("series is already predicted as '{0}'")]
    AlreadyDesired(String),

    #[error("experiment: {0}")]
    Experiment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
