//! IO layer around `dwenet-core`: dataset loaders, config files,
//! checkpoints, report writers, synthetic corpora and the multi-run
//! driver used by the CLI.

pub mod checkpoint;
pub mod config;
pub mod loaders;
pub mod reports;
pub mod runner;
pub mod synth;

/// Everything that can go wrong on the IO side. Core's numeric errors
/// pass through; file-format problems carry the path and line so the
/// message alone is enough to find the bad record.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] dwenet_core::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

impl Error {
    /// An io error pinned to the file it happened on. Open/read/write
    /// entry points use this; a bare `io error:` with no path means a
    /// failure after the file was already located.
    fn at(path: &std::path::Path, source: std::io::Error) -> Error {
        Error::File { path: path.display().to_string(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
