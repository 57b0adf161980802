use std::io;

use thiserror::Error;

/// Errors produced by scheduling, analysis and artifact I/O.
#[derive(Debug, Error)]
pub enum TssError {
    /// A scalar argument fell outside its admissible domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two rasters or tensors that must agree in shape do not.
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("unknown preset `{0}` (expected one of stablesr, pasd, supir)")]
    UnknownPreset(String),

    #[error("iteration index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    /// An input file parsed but does not hold what was expected.
    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("image codec: {0}")]
    Image(#[from] image::ImageError),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, TssError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(TssError::Domain(msg.into()))
}

pub(crate) fn shape<T>(msg: impl Into<String>) -> Result<T> {
    Err(TssError::Shape(msg.into()))
}
