use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("no non-crossing pairings of an odd number ({0}) of points")]
    OddPairing(usize),

    #[error("fixed point did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("iteration diverged after {iterations} iterations: couplings outside convergence ball (last finite residual {residual:e})")]
    Diverged { iterations: usize, residual: f64 },

    #[error("resource cap exceeded: {what} = {requested} > {cap}")]
    ResourceCap {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("{context}: {message}")]
    Parse { context: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }
}
