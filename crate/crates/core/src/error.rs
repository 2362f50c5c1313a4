use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = OrfError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum OrfError {
    /// Hyperparameters or experiment configuration rejected during validation.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A point or query that does not fit the model it was given to.
    #[error("invalid input: {0}")]
    Input(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("malformed document: {0}")]
    Document(String),

    /// A checked runtime invariant did not hold. The string names it.
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl OrfError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        OrfError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<serde_json::Error> for OrfError {
    fn from(e: serde_json::Error) -> Self {
        OrfError::Document(e.to_string())
    }
}

impl From<csv::Error> for OrfError {
    fn from(e: csv::Error) -> Self {
        OrfError::Document(e.to_string())
    }
}
