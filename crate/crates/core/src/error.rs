use std::path::PathBuf;

use thiserror::Error;

use crate::corpus::Mode;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },

    #[error("collection is empty")]
    EmptyCollection,

    #[error("query `{0}` is empty after processing")]
    EmptyQuery(String),

    #[error("unknown document `{0}`")]
    DocNotFound(String),

    #[error("term `{0}` does not occur in the collection")]
    UndefinedTerm(String),

    #[error("index format: {0}")]
    Format(String),

    #[error("index checksum mismatch (expected {expected}, found {found})")]
    Checksum { expected: String, found: String },

    #[error("index was built in {found:?} mode, expected {expected:?}")]
    ModeMismatch { expected: Mode, found: Mode },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
