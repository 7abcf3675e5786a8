//! Error type shared across the pipeline.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Input file is in a format the loader does not understand.
    #[error("unsupported format: {0}")]
    Format(String),

    /// A file parsed structurally but its contents are invalid.
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Input too degenerate to cluster (fewer distinct values than clusters).
    #[error("degenerate clustering input: {0}")]
    DegenerateInput(String),

    #[error("patient {patient} has {have} slices, need at least {need}")]
    InsufficientSlices {
        patient: String,
        have: usize,
        need: usize,
    },

    /// Bad training configuration (unknown key, unknown architecture,
    /// dimension mismatch between data and model). Maps to CLI exit code 2.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("training diverged: loss not finite at epoch {epoch}")]
    Divergence { epoch: usize },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
