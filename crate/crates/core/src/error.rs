use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("eigensolver did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("barrier violated: {0}")]
    BarrierViolated(String),

    #[error("SMW core is numerically singular (condition number {condition:e})")]
    SingularCore { condition: f64 },

    #[error("certificate broken at step {step}: {reason}")]
    CertificateBroken { step: usize, reason: String },

    #[error("shift bracket exceeded {limit:e} without meeting the target")]
    BracketFailure { limit: f64 },

    #[error("insufficient tail: {points} points in the regression window, need at least 4")]
    InsufficientTail { points: usize },

    #[error("total matrix is singular (smallest eigenvalue {lambda_min:e})")]
    SingularTotal { lambda_min: f64 },

    #[error("no index admits a valid barrier step at round {round}")]
    StepStall { round: usize },

    #[error("invalid ensemble: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("I/O failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }

    /// True for failures that indicate a broken certificate rather than bad input.
    pub fn is_certificate_failure(&self) -> bool {
        matches!(
            self,
            Error::CertificateBroken { .. } | Error::StepStall { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
