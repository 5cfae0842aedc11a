use std::path::PathBuf;

use thiserror::Error;

use crate::data::Stamp;

/// Errors raised anywhere in the pipeline.
///
/// The CLI maps these onto exit codes through [`DuneError::exit_code`].
#[derive(Debug, Error)]
pub enum DuneError {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("missing stamp {0}")]
    MissingStamp(Stamp),

    #[error("stamp mismatch: expected {expected}, got {actual}")]
    StampMismatch { expected: Stamp, actual: Stamp },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("degenerate normalization for channel `{channel}`: min == max == {value}")]
    DegenerateStats { channel: String, value: f64 },

    #[error("normalization statistics mismatch: checkpoint {checkpoint}, inputs {inputs}")]
    StatsMismatch { checkpoint: String, inputs: String },

    #[error("unsupported window {0} (expected one of 1, 2, 3, 4, 6, 12)")]
    UnsupportedWindow(usize),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("incomplete period: {0}")]
    Incomplete(String),

    #[error("empty region `{0}`")]
    EmptyRegion(String),

    #[error("non-finite loss at epoch {epoch}, batch {batch}: {detail}")]
    NonFiniteLoss { epoch: usize, batch: usize, detail: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("corrupt file {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },

    #[error("netcdf error in {path}: {reason}")]
    NetCdf { path: PathBuf, reason: String },

    #[error("plot error: {0}")]
    Plot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl DuneError {
    /// Process exit code: 1 for invalid configuration (argument errors
    /// exit with 1 from the parser), 2 for data problems, 3 for numeric
    /// failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            DuneError::Config(_) => 1,
            DuneError::NonFiniteLoss { .. } | DuneError::DegenerateStats { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, DuneError>;
