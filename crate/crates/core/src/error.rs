use thiserror::Error;

/// Errors raised by field evaluation, problem construction and the solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("unknown identifier `{name}` at position {position}")]
    UnknownIdentifier { name: String, position: usize },

    #[error("function `{name}` at position {position} expects {expected} argument(s), got {found}")]
    Arity {
        name: String,
        position: usize,
        expected: String,
        found: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("nonsmooth point: gradient undefined at {0:?}")]
    NonsmoothPoint(Vec<f64>),

    #[error("unknown corpus member `{0}`")]
    UnknownCorpus(String),

    #[error("mountain-pass geometry violated: {0}")]
    Geometry(String),

    #[error("endpoint exclusion violated: high-set point {center:?} lies within {radius} of endpoint {endpoint:?}")]
    EndpointExclusion {
        center: Vec<f64>,
        endpoint: Vec<f64>,
        radius: f64,
    },

    #[error("flow duration {duration} exceeds the safe step h_max = {h_max}")]
    FlowDuration { duration: f64, h_max: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
