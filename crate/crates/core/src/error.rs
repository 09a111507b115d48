use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid state: {0}")]
    StateValidity(String),

    #[error("integration failed at t = {t} us: {reason}")]
    IntegrationFailure { t: f64, reason: String },

    #[error("steady state did not converge after {iterations} iterations (last relative change {change:e})")]
    Convergence { iterations: usize, change: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no transparency feature found")]
    FeatureNotFound,

    #[error("ill-posed feature: {0}")]
    IllPosedFeature(String),

    #[error("ill-posed fit problem: {0}")]
    IllPosed(String),

    #[error("model evaluation failed for candidate [{candidate}]: {source}")]
    Candidate {
        candidate: String,
        #[source]
        source: Box<Error>,
    },
}
