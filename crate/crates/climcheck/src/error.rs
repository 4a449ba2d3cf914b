use std::path::PathBuf;

use thiserror::Error;

/// Problems with the operator's inputs: manifests, configuration files,
/// prompt catalogs. Mapped to exit code 2 by the CLI.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{}:{line}: {message}", path.display())]
    Manifest { path: PathBuf, line: usize, message: String },
    #[error("cannot read {}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] climcheck_core::Error),
}

/// Failures of the evidence cache. These abort a run, since results could
/// no longer be reproduced from disk.
#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache I/O at {}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("corrupt cache entry {}: {message}", path.display())]
    Corrupt { path: PathBuf, message: String },
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error("image {} is unreadable", path.display())]
    Image { path: PathBuf, source: std::io::Error },
    #[error("run record {}: {message}", path.display())]
    Record { path: PathBuf, message: String },
    #[error("I/O at {}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] climcheck_core::Error),
}
