use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("constrained least squares did not converge after {iterations} bisection steps")]
    SolverDiverged { iterations: usize },

    #[error("quadrature relative error estimate {rel_err:e} exceeds the failure threshold")]
    Quadrature { rel_err: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invariant violated: {0}")]
    Violation(String),

    #[error("round {round}: {source}")]
    AtRound {
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn at_round(self, round: usize) -> Self {
        Error::AtRound {
            round,
            source: Box::new(self),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for configuration-class errors (CLI exit code 2).
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) | Error::DimensionMismatch { .. } => true,
            Error::AtRound { source, .. } => source.is_config(),
            _ => false,
        }
    }
}
