use std::path::PathBuf;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("invalid mesh: {0}")]
    Validation(String),

    #[error("region `{0}` has no conductivity in the region table")]
    MissingRegion(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("linear solver stagnated after {iterations} iterations (relative residual {residual:.3e})")]
    Stagnation { iterations: usize, residual: f64 },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("Newton iteration did not converge in {} iterations (last relative residual {:.3e})", .history.len(), .history.last().copied().unwrap_or(f64::NAN))]
    NoConvergence { history: Vec<f64> },

    #[error("size mismatch: {0}")]
    MeshMismatch(String),

    #[error("coercivity lower bound undefined: {0}")]
    Coercivity(String),

    #[error("singular reduced system")]
    SingularReduced,

    #[error("rank-deficient regression ({rank} of {terms} basis terms resolved); increase the sample size or lower the degree")]
    RankDeficient { rank: usize, terms: usize },

    #[error("invalid distribution: {0}")]
    Distribution(String),

    #[error("container: {0}")]
    Container(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
