use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Evaluation at a point where the quantity is undefined (the origin, or
    /// the characteristic set for quantities singular there).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Near the characteristic set the field F needs a closed-form
    /// cancellation that the coefficient family does not provide.
    #[error("conditioning error: {0}")]
    Conditioning(String),

    #[error("point outside the grid box: {0}")]
    OutOfDomain(String),

    #[error("finite-difference collar violated: |z| = {z_norm:e} with step {step:e}")]
    Collar { z_norm: f64, step: f64 },

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("linear system is not positive definite (curvature {curvature:e} at iteration {iteration})")]
    Indefinite { iteration: usize, curvature: f64 },

    #[error("degenerate quantity: {0}")]
    Degenerate(String),

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
