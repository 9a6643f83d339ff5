use thiserror::Error;

use crate::signal::Shape;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: Shape, actual: Shape },

    #[error("timestep {t} out of range 1..={max}")]
    TimestepOutOfRange { t: usize, max: usize },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("invalid operator parameters: {0}")]
    InvalidOperator(String),

    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("non-finite {quantity} at step t={t}")]
    NonFinite { t: usize, quantity: &'static str },

    #[error("fft requires a square power-of-two channel, got {h}x{w}")]
    FftSize { h: usize, w: usize },

    #[error("curve mismatch: {0}")]
    CurveMismatch(String),

    #[error("config parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}
