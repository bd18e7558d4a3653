use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    /// Invalid or unreadable experiment configuration. `location` is a key
    /// path (`features.count`) or a `line:column` position.
    #[error("config error at {location}: {message}")]
    Config { location: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error(transparent)]
    Numeric(#[from] qff::Error),
}

impl LabError {
    pub fn config(location: impl Into<String>, message: impl Into<String>) -> Self {
        LabError::Config {
            location: location.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for configuration and file problems, 3 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Numeric(e) if e.is_numeric() => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
