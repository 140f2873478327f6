use thiserror::Error;

/// Errors raised by the algebra, model and estimator layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An element's support does not fit in the requested volume.
    #[error("volume error: {0}")]
    Volume(String),

    /// The requested volume exceeds the configured dimension cap.
    #[error("capacity exceeded at n = {n}: dimension {dim} > cap {cap}")]
    Capacity { n: usize, dim: usize, cap: usize },

    /// Shape mismatch, non-Hermitian input or a non-projection where one was required.
    #[error("shape error: {0}")]
    Shape(String),

    /// Functional calculus outside its domain (e.g. log of the zero element).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("positivity error: eigenvalue {0} below tolerance")]
    Positivity(f64),

    /// A model failed one of its structural checks.
    #[error("model validity error: {0}")]
    ModelValidity(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The oracle only covers a restricted class of observables.
    #[error("oracle inapplicable: {0}")]
    OracleInapplicable(String),
}

pub type Result<T> = std::result::Result<T, Error>;
