use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad wav file {path}: {reason}")]
    Wav { path: PathBuf, reason: String },

    #[error("invalid filter design: {0}")]
    FilterDesign(String),

    #[error("frequency {freq} Hz outside [0, {nyquist}] Hz")]
    FrequencyRange { freq: f64, nyquist: f64 },

    #[error("sample rate mismatch: {left} Hz vs {right} Hz")]
    RateMismatch { left: u32, right: u32 },

    #[error("{0}")]
    Invalid(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("ingest error: {0}")]
    Ingest(String),

    #[error("statistics error: {0}")]
    Stats(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn wav(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Wav {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
