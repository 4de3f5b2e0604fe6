use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("hstk: {0}")]
    Hstk(#[from] HstkError),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    /// Malformed line in a text input (manifest, score file, config, ...).
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("invalid {what}: {message}")]
    Invalid { what: &'static str, message: String },

    #[error("dimension mismatch: {what} has {got}, expected {expected}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// Inputs are individually valid but inconsistent with each other.
    #[error("{0}")]
    Data(String),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn invalid(what: &'static str, message: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            message: message.into(),
        }
    }

    pub fn parse(source_name: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.into(),
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum HstkError {
    #[error("not an HSTK file")]
    BadMagic,
    #[error("unsupported version {0}")]
    UnsupportedVersion(u16),
    #[error("unsupported flags {0:#06x}")]
    UnsupportedFlags(u16),
    #[error("truncated")]
    Truncated,
    #[error("trailing data after payload")]
    TrailingData,
    #[error("corrupt values: non-finite entry at index {0}")]
    CorruptValues(usize),
    #[error("invalid shape {layers}x{frames}x{dim}")]
    BadShape { layers: u32, frames: u32, dim: u32 },
    #[error("invalid utterance id: {0}")]
    BadId(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
