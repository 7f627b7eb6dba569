use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{axis} = {size} is not divisible by 2^{scales}")]
    NotDyadic {
        axis: &'static str,
        size: usize,
        scales: usize,
    },

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible sampling density: {0}")]
    InfeasibleDensity(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("non-finite value in iterate at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("power iteration did not converge after {iterations} iterations (last relative change {residual:e})")]
    PowerIterationDiverged { iterations: usize, residual: f64 },

    #[error("ground truth required: {0}")]
    MissingGroundTruth(&'static str),

    #[error("missing regularization weight lambda for {0}")]
    MissingLambda(&'static str),

    #[error("unsupported or corrupt file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
