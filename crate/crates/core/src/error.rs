use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("power iteration did not converge within {cap} iterations (residual {residual:e})")]
    NoConvergence { cap: usize, residual: f64 },

    #[error("walk reached max_norm {norm} > {limit}; alpha is likely misconfigured")]
    RunawayWalk { norm: i64, limit: i64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
