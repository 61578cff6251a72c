use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size {0} is invalid: need an even number of points >= 8")]
    InvalidGridSize(usize),

    #[error("dimension mismatch: expected {expected} values, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("fields live on different grids ({0} vs {1} points per side)")]
    GridMismatch(usize, usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("vorticity has a nonzero mean mode (|mean| = {0:e}); Biot-Savart needs mean-free input")]
    NonMeanFree(f64),

    #[error("vector {0:?} is not of unit length")]
    NonUnitVector([f64; 3]),

    #[error("sample point {0:?} lies off the {1}^3 grid")]
    SampleOffGrid([usize; 3], usize),

    #[error("vorticity magnitude {magnitude:e} at {point:?} is below the direction threshold {threshold:e}")]
    BelowThreshold {
        point: [usize; 3],
        magnitude: f64,
        threshold: f64,
    },

    #[error("blow-up detected at t = {time}: {reason}")]
    BlowUp { time: f64, reason: String },

    #[error("record series has non-uniform stride (dt {first} vs {other})")]
    NonUniformStride { first: f64, other: f64 },

    #[error("need at least {needed} records, got {got}")]
    TooFewRecords { needed: usize, got: usize },

    #[error("exponent gamma = {0} exceeds 1; the Gronwall bound is not available")]
    GammaTooLarge(f64),

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("unsupported schema `{found}` (expected `{expected}`)")]
    Schema { expected: String, found: String },

    #[error("run directory {0} does not exist")]
    MissingRunDir(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
