use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid constraint set: {0}")]
    InvalidConstraint(String),

    #[error("invalid objective: {0}")]
    InvalidObjective(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("quadrature did not converge: residual {residual:e} at {nodes} nodes")]
    QuadratureNotConverged { residual: f64, nodes: usize },

    #[error("query point outside the unit box")]
    PointOutsideBox,

    #[error("oracle order mismatch: expected a {expected}-order oracle")]
    OracleOrderMismatch { expected: &'static str },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}
