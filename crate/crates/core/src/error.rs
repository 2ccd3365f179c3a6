use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point outside the domain: {0}")]
    DomainViolation(String),

    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),

    #[error("{method} did not converge after {iterations} iterations (residual {residual:.3e})")]
    Convergence {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("newton stagnated at eps = {eps:.3e} after {iterations} iterations (residual {residual:.3e})")]
    NewtonStagnation {
        eps: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    #[error("profile vanishes at t = {at:.6e} before t_max = {t_max:.6e}")]
    ProfileExtinct { at: f64, t_max: f64 },

    #[error("sequence overflowed at k = {k}")]
    Overflow { k: usize },

    #[error("ill-conditioned projection: {0}")]
    IllConditioned(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for the failure classes that the command line reports with exit code 2.
    pub fn is_convergence_failure(&self) -> bool {
        matches!(
            self,
            Error::Convergence { .. } | Error::NewtonStagnation { .. } | Error::InvariantViolation(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
