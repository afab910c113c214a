use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bounds for dimension {dim}: [{lo}, {hi}]")]
    Bounds { dim: usize, lo: f64, hi: f64 },
    #[error("search space must have at least one dimension")]
    EmptySpace,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("population is empty")]
    EmptyPopulation,
    #[error("population of {actual} is too small, need at least {required}")]
    PopulationTooSmall { required: usize, actual: usize },
    #[error("evaluation budget exhausted ({used}/{max} design evaluations)")]
    BudgetExhausted { used: u64, max: u64 },
    #[error("genome component {dim} = {value} lies outside [{lo}, {hi}]")]
    OutOfBoundsGenome { dim: usize, value: f64, lo: f64, hi: f64 },
    #[error("evaluator failure: {0}")]
    Evaluator(#[from] EvaluatorError),
    #[error("numerical instability at t = {time} min: {what}")]
    NumericalInstability { time: f64, what: String },
    #[error("tumour of radius {radius} um does not fit a {width}x{height} um domain")]
    DomainTooSmall { radius: f64, width: f64, height: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for failures raised by an objective evaluator rather than by
    /// configuration or I/O.
    pub fn is_evaluator_failure(&self) -> bool {
        matches!(self, Error::Evaluator(_) | Error::NumericalInstability { .. })
    }
}

/// Failures of the external evaluator protocol.
#[derive(Debug, Error)]
pub enum EvaluatorError {
    #[error("failed to spawn evaluator `{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed evaluator response {line:?}: {reason}")]
    Protocol { line: String, reason: String },
    #[error("evaluator timed out after {0:?}")]
    Timeout(std::time::Duration),
    #[error("evaluator exited with status {0}")]
    NonZeroExit(String),
    #[error("evaluator i/o: {0}")]
    Io(#[from] std::io::Error),
}
