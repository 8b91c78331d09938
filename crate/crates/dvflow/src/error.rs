//! Error type shared by every module.

use thiserror::Error;

/// Failures reported by mesh construction, assembly, solvers and I/O.
///
/// Variants split into two classes: validation failures (bad input,
/// inconsistent data) and numerical failures (solver breakdown,
/// non-convergence). The CLI maps them to distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument or configuration value is outside its admissible range.
    #[error("invalid argument `{field}`: {reason}")]
    InvalidArgument { field: String, reason: String },
    /// Operation is not defined for the given complex (wrong dimension, missing boundary).
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    /// Cochain length or degree does not match the complex.
    #[error("shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    /// Mesh generation could not satisfy its quality constraint.
    #[error("mesh generation failed: {0}")]
    MeshGeneration(String),
    /// A geometric or combinatorial invariant of the complex is violated.
    #[error("invalid complex: {0}")]
    InvalidComplex(String),
    /// Malformed input file.
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    /// Sparse factorization or iterative solve failed.
    #[error("linear solver failure: {0}")]
    Solver(String),
    /// Nonlinear iteration did not converge; carries the suggested step.
    #[error("time step rejected at t = {t}: {reason} (suggested dt = {suggested_dt})")]
    StepRejected { t: f64, reason: String, suggested_dt: f64 },
    /// Eigenvalue iteration stalled before reaching its tolerance.
    #[error("eigensolver stagnation: {0}")]
    Eigen(String),
    /// Any other numerical breakdown (non-finite values, collapsed norms).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn arg(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument { field: field.to_string(), reason: reason.into() }
    }

    /// True for failures caused by the input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument { .. }
                | Error::Unsupported(_)
                | Error::ShapeMismatch { .. }
                | Error::InvalidComplex(_)
                | Error::MeshGeneration(_)
                | Error::Parse { .. }
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::ShapeMismatch { expected, got })
    }
}
