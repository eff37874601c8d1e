use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while validating configuration or arguments.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("{0}")]
    Parse(String),
    #[error(
        "initial damage is not consistent with the threshold property: \
         {} element(s) with |grad u0| >= lambda = {lambda} are undamaged: {elements:?}",
        elements.len()
    )]
    InitialThreshold { lambda: f64, elements: Vec<usize> },
}

impl ConfigError {
    pub fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:e})")]
pub struct SolverError {
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(
        "alternating minimization did not reach a fixed point in {iterations} iterations \
         (last energies {last_energies:?})"
    )]
    NoFixedPoint {
        iterations: usize,
        last_energies: [f64; 2],
    },
    #[error(
        "alternating minimization cycled after {iterations} iterations (last energies {last_energies:?})"
    )]
    Cycle {
        iterations: usize,
        last_energies: [f64; 2],
    },
    #[error("step functional increased by {increase:e} during a half-step")]
    NotMonotone { increase: f64 },
    #[error("brute-force enumeration refused: {undamaged} undamaged elements exceed the cap of {cap}")]
    TooManyCandidates { undamaged: usize, cap: usize },
    #[error("invalid argument: {0}")]
    Argument(String),
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl IoError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.into(),
            source,
        }
    }
}
