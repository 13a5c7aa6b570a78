use thiserror::Error;

/// Errors raised by model construction, regression and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in regression data")]
    NonFinite,

    #[error("cholesky factorization failed after jitter escalation")]
    Factorization,

    #[error("feature map covers {features} periods but {needed} are required")]
    PeriodMismatch { features: usize, needed: usize },

    #[error("normalized distance undefined: Q* is identically zero")]
    ZeroValueFunction,

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
