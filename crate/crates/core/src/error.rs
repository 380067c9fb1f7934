//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input text (diffs, vocab files, checkpoints).
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Invalid data or configuration supplied by the caller.
    #[error("{0}")]
    Data(String),

    /// Tensor or checkpoint shape disagreement.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A repository could not be mined; mining continues with the next one.
    #[error("repository {repo}: {msg}")]
    Repo { repo: String, msg: String },

    /// Training aborted (e.g. divergence).
    #[error("training failed: {0}")]
    Train(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
