//! Error type shared across the crate.
//!
//! Two broad classes matter to callers: validation errors (bad scenario,
//! bad queue config, malformed input data) and I/O errors. The CLI maps
//! them to distinct exit codes, so the distinction is kept in the enum
//! rather than flattened into strings.

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A scenario, config, or argument violated a documented invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A trace or CSV file had malformed content. Carries the 1-based line.
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// Scenario JSON could not be deserialized (unknown key, wrong type, ...).
    #[error("scenario parse error: {0}")]
    ScenarioJson(#[from] serde_json::Error),

    /// Filesystem-level failure; carries the path that was being touched.
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// True for errors a caller caused (as opposed to environment failures).
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
