use thiserror::Error;

/// Errors produced by the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid camera: {0}")]
    InvalidCamera(String),

    #[error("invalid segment: {0}")]
    InvalidSegment(String),

    #[error("second-order pose undefined: |alpha * row| = {0} is not below 1")]
    PoseDomain(f64),

    #[error("singular configuration: compensation denominator {0:e} is too close to zero")]
    SingularConfiguration(f64),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("no real solution")]
    NoSolution,

    #[error("segment endpoints are not on the expected side of the line at infinity")]
    SideMismatch,

    #[error("insufficient data: {available} segments available, {required} required")]
    InsufficientData { available: usize, required: usize },

    #[error(
        "estimation failed after {iterations} iterations \
         ({rejected_samples} rejected samples, {solver_failures} solver failures, \
         {implausible} implausible candidates)"
    )]
    EstimationFailed {
        iterations: usize,
        rejected_samples: usize,
        solver_failures: usize,
        implausible: usize,
    },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, Error>;
