use thiserror::Error;

/// Errors shared by the estimation, solver and simulation modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A correlation argument left the interval the kernels are defined on.
    #[error("correlation {sigma} outside the admissible range |sigma| <= {limit}")]
    SigmaOutOfRange { sigma: f64, limit: f64 },

    /// An argument failed a structural precondition (shape, ordering, emptiness).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two inputs that must agree in dimension do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A linear-algebra step lost positive definiteness or hit a singular system.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// An iterative solver exhausted its iteration budget.
    #[error("{what}: no convergence after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
