use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A value violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid config: {field}: {reason}")]
    Config { field: String, reason: String },

    /// Annotation or layer file could not be parsed. `record` names the
    /// offending entry, e.g. `annotations[3]`.
    #[error("failed to load {path}: {record}: {reason}")]
    Load {
        path: PathBuf,
        record: String,
        reason: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True when the failure was caused by user input (exit code 2) rather
    /// than a bug or environment fault (exit code 1).
    pub fn is_user_error(&self) -> bool {
        !matches!(self, Error::Internal(_))
    }
}
