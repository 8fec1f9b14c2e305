use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("paths live on different grids")]
    GridMismatch,

    #[error("grid is not symmetric under t -> T - t")]
    NonSymmetricGrid,

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e} after {subdivisions} subdivisions")]
    Quadrature {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("observation has zero likelihood under every payoff atom")]
    ZeroLikelihood,

    #[error("inconsistent observation: {0}")]
    InconsistentObservation(String),

    #[error("insufficient Monte Carlo sample: {hits} hits, need at least {required}")]
    InsufficientSample { hits: usize, required: usize },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
