use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read or write {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed instance document: {0}")]
    Parse(#[from] serde_json::Error),

    /// An instance violated one of its invariants; `field` is a JSON-like path
    /// such as `requests[2].tw_hi`.
    #[error("invalid instance at {field}: {message}")]
    Validation { field: String, message: String },

    #[error("cost derivation failed: {0}")]
    Cost(String),

    #[error("big-M horizon is not representable ({0})")]
    Overflow(f64),

    #[error("solution file line {line}: {message}")]
    SolutionFormat { line: usize, message: String },

    #[error("external solver: {0}")]
    External(String),

    #[error("cannot decode solution: {0}")]
    Decode(String),

    #[error("oracle caps exceeded: {0}")]
    OracleCaps(String),

    #[error("invalid charging input: {0}")]
    Charging(String),

    #[error("invalid generator config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation { field: field.into(), message: message.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
