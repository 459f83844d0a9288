use thiserror::Error;

/// Errors raised by the numerical kernels, the model layer and the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric at entry ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("Jacobi eigendecomposition did not converge")]
    EigenNoConvergence,

    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("matrix is singular or numerically singular")]
    Singular,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("parameters are not conservative: {0}")]
    NonConservative(String),

    #[error("Riccati solution exploded before the horizon (t+ estimate {t_plus})")]
    BlowUp { t_plus: f64 },

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("log-determinant branch ambiguity near t = {t}")]
    BranchAmbiguity { t: f64 },

    #[error("cross-check failed: {0}")]
    CrossCheck(String),

    #[error("sequence did not converge: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
