use thiserror::Error;

/// Errors raised by the geometric primitives and solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dimension must be at least {min}, got {found}")]
    DimensionTooSmall { min: usize, found: usize },
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("degenerate ray: endpoint coincides with the apex")]
    DegenerateRay,
    #[error("{what} = {value} is outside the supported range [{min}, {max}]")]
    OutOfRange {
        what: &'static str,
        value: usize,
        min: usize,
        max: usize,
    },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("sphere is near-tangent to an edge; crossing count is ill-conditioned")]
    NearTangent,
    #[error("infeasible: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
