use thiserror::Error;

/// Errors raised by the kinetic laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("grid mismatch: operands live on different velocity grids")]
    GridMismatch,

    #[error("non-realizable moments: {0}")]
    NonRealizable(String),

    #[error("matrix is not positive definite (minimum eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("boundary state: {0}")]
    BoundaryState(String),

    #[error("distribution has a non-positive value {value:e} at node {node}")]
    NonPositiveValue { node: usize, value: f64 },

    #[error("support violation at node {node}: f > 0 where g = 0")]
    SupportViolation { node: usize },

    #[error("trace constraint violated: sum of eigenvalues {sum} but 3T = {expected}")]
    TraceMismatch { sum: f64, expected: f64 },

    #[error("conservation correction did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("stability gate violated: dt * A_nu = {value} > {limit}")]
    Stability { value: f64, limit: f64 },

    #[error("CFL condition violated: dt * v_max / dx = {value} > {limit}")]
    Cfl { value: f64, limit: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for failures of the numerics rather than of the input configuration.
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            Error::InvalidConfig(_) | Error::Stability { .. } | Error::Cfl { .. }
        )
    }
}
