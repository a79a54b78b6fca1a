//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}:{line}: expected 3 tab-separated fields, found {fields}")]
    MalformedLine {
        file: PathBuf,
        line: usize,
        fields: usize,
    },

    /// Inconsistent or unusable input data (vocab mismatch, bad checkpoint
    /// header, empty split where one is required, ...).
    #[error("{0}")]
    Data(String),

    #[error("invalid config: {0}")]
    Config(String),

    /// Non-finite value produced or encountered during numerical work.
    #[error("non-finite value in {context}")]
    NonFinite { context: String },
}

impl Error {
    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn non_finite(context: impl Into<String>) -> Self {
        Error::NonFinite {
            context: context.into(),
        }
    }
}
