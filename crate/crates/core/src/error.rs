use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A mathematical precondition was violated (empty set, empty gold, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// One or more input records failed validation. Each entry names an offending record.
    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error("{0}")]
    Refused(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// True for errors caused by bad parameters rather than bad data.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Parameter(_))
    }
}
