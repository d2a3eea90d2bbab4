use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of a physical formula.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}:{line}: validation failed: {message}")]
    Validation {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("no events found in {0}")]
    NoEvents(PathBuf),

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("R² undefined: actual values are constant")]
    R2Undefined,

    /// Failure talking to an external model process.
    #[error("external model protocol error (request {request_id:?}): {message}")]
    Protocol {
        request_id: Option<u64>,
        message: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn protocol(request_id: Option<u64>, message: impl Into<String>) -> Self {
        Error::Protocol {
            request_id,
            message: message.into(),
        }
    }
}
