use thiserror::Error;

/// Errors produced while building or applying fractional stencils.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of a function (e.g. `gamma(x)` with `x <= 0`).
    #[error("domain error: {0}")]
    Domain(String),

    /// A user-supplied parameter failed validation.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Input sequences do not have the lengths the operation requires.
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    /// Vandermonde nodes must be pairwise distinct.
    #[error("duplicate Vandermonde node {0}")]
    DuplicateNode(f64),

    /// A saved resume state does not belong to the requested extension.
    #[error("resume state mismatch: {0}")]
    StateMismatch(String),

    /// The Riesz normalisation constant is singular (alpha = 1).
    #[error("Riesz constant is singular at alpha = {0}")]
    SingularConstant(f64),

    /// An iterative or series evaluation did not converge within its budget.
    #[error("no convergence in {what} after {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    /// An inverse transform left an imaginary residue that a conjugate-symmetric
    /// spectrum cannot produce.
    #[error("imaginary residue {residue:e} exceeds threshold {threshold:e}")]
    SymmetryViolation { residue: f64, threshold: f64 },

    /// Floating point computation lost too much accuracy to be trusted.
    #[error("numerical instability: {0}")]
    Instability(String),

    /// A quantity needed for a ratio vanished or underflowed.
    #[error("degenerate evaluation: {0}")]
    Degenerate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by floating point breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::SymmetryViolation { .. }
                | Error::Instability(_)
                | Error::Degenerate(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
