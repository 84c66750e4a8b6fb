use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singularity: {0}")]
    Singular(String),

    /// Complex square root evaluated off the admissible branch.
    #[error("branch violation at lambda = {re} + {im}i: {detail}")]
    Branch { re: f64, im: f64, detail: String },

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("no convergence after {iterations} iterations (last residual {last_residual:e})")]
    NonConvergence {
        iterations: usize,
        last_residual: f64,
        history: Vec<f64>,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("configuration error: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
