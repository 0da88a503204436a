use std::path::PathBuf;

use thiserror::Error;

/// Everything that ends a run with status 3.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {field}: {message}")]
    Invalid { field: String, message: String },
    #[error("{}: {source}", source.name())]
    Numeric {
        #[from]
        source: anilap_core::Error,
    },
}
