//! Error taxonomy shared by all kernels and solvers.

use thiserror::Error;

/// Failure modes of the numerical kernels and solvers.
///
/// Variant names double as stable identifiers for front ends: the CLI
/// prints them verbatim so scripts can distinguish configuration
/// problems from numerical ones.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A matrix expected to be symmetric positive definite is not.
    #[error("NotPositiveDefinite: {0}")]
    NotPositiveDefinite(String),

    /// Drift matrix has an eigenvalue with non-negative real part.
    #[error("NotHurwitz: spectral abscissa {abscissa:.6e} >= 0")]
    NotHurwitz { abscissa: f64 },

    /// Eigenvector matrix condition number exceeds the configured cap.
    #[error("NonDiagonalizable: eigenvector condition {condition:.3e} exceeds cap {cap:.1e}")]
    NonDiagonalizable { condition: f64, cap: f64 },

    /// A scalar function was evaluated at an eigenvalue where it is singular.
    #[error("SingularEigenvalue: {0}")]
    SingularEigenvalue(String),

    /// A linear solve met a numerically singular matrix.
    #[error("SingularMatrix: {0}")]
    SingularMatrix(String),

    /// Metric tensor is singular beyond the configured condition cap.
    #[error("SingularMetric: {0}")]
    SingularMetric(String),

    /// A control point left the model's declared domain box.
    #[error("DomainExceeded: {0}")]
    DomainExceeded(String),

    /// A metric expected to be positive is not.
    #[error("NonPositiveMetric: {0}")]
    NonPositiveMetric(String),

    /// Iterative solver did not reach its tolerance.
    #[error("NotConverged: {iterations} iterations, residual {residual:.3e}")]
    NotConverged { iterations: usize, residual: f64 },

    /// Division by a quantity that must be strictly positive.
    #[error("DivisionByZero: {0}")]
    DivisionByZero(String),

    /// Inconsistent user-supplied arguments (shapes, ranges, counts).
    #[error("InvalidArgument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Stable kernel error name (the variant identifier).
    pub fn name(&self) -> &'static str {
        match self {
            Error::NotPositiveDefinite(_) => "NotPositiveDefinite",
            Error::NotHurwitz { .. } => "NotHurwitz",
            Error::NonDiagonalizable { .. } => "NonDiagonalizable",
            Error::SingularEigenvalue(_) => "SingularEigenvalue",
            Error::SingularMatrix(_) => "SingularMatrix",
            Error::SingularMetric(_) => "SingularMetric",
            Error::DomainExceeded(_) => "DomainExceeded",
            Error::NonPositiveMetric(_) => "NonPositiveMetric",
            Error::NotConverged { .. } => "NotConverged",
            Error::DivisionByZero(_) => "DivisionByZero",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }
}
