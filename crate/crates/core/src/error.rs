use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("numerical rank deficiency: {0}")]
    NumericalRank(String),

    #[error("velocity grid n_v = {n_v} exceeds the full collision cap {cap}; use the BGK backend for grids this large")]
    GridTooLarge { n_v: usize, cap: usize },

    #[error("time step {dt} violates the explicit collision bound; admissible dt <= {admissible}")]
    Stability { dt: f64, admissible: f64 },

    #[error("lifespan exceeded at t = {reached_time}: {reason}")]
    LifespanExceeded { reached_time: f64, reason: String },

    #[error("discretization failure: {0}")]
    Discretization(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
