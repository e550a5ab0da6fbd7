use thiserror::Error;

/// Errors raised by the numerical library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },

    #[error("integral diverges: {0}")]
    Divergent(String),

    #[error("point outside the supported range: {0}")]
    OutOfRange(String),

    #[error("insufficient stencil at node {node}")]
    InsufficientStencil { node: usize },

    #[error("lambda {lambda} is not lattice compatible with spacing {h}")]
    IncompatibleLambda { lambda: f64, h: f64 },

    #[error("geometric precondition violated: {0}")]
    Geometry(String),

    #[error("quadrature failed to converge on [{a}, {b}]")]
    Quadrature { a: f64, b: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn param(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field: field.into(), reason: reason.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
