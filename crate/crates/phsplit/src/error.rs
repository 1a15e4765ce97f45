//! Crate-wide error type.

use thiserror::Error;

/// Errors reported by the matrix kernel, the model layer and the steppers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Operand shapes do not match the operation.
    #[error("dimension mismatch in {op}: {lhs} vs {rhs}")]
    DimensionMismatch {
        op: &'static str,
        lhs: String,
        rhs: String,
    },

    /// A matrix entry or state component is NaN or infinite.
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    /// Operation requires a square matrix.
    #[error("{op} requires a square matrix, got {rows}x{cols}")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },

    /// Linear solve hit a (numerically) singular pivot.
    #[error("singular matrix in linear solve")]
    Singular,

    /// Invalid model parameter (non-positive mass, inertia, ...).
    #[error("invalid model parameter: {0}")]
    InvalidParameter(String),

    /// System matrices violate the port-Hamiltonian structure assumptions.
    #[error("invalid port-Hamiltonian system: {0}")]
    InvalidSystem(String),

    /// A commutator does not have the (skew-)symmetry its parity dictates.
    #[error("commutator parity violation: {0}")]
    ParityViolation(String),

    /// Scheme name not in the catalogue.
    #[error("unknown scheme '{0}'")]
    UnknownScheme(String),

    /// Scheme does not belong to the family an operation expects.
    #[error("scheme '{name}' not usable here: {reason}")]
    WrongSchemeFamily { name: String, reason: String },

    /// Step size rejected by a stepper.
    #[error("invalid step size {0}")]
    InvalidStep(f64),

    /// Trajectory state overflowed or became NaN at a given step.
    #[error("non-finite state at step {step}")]
    NonFiniteState { step: usize },

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature did not converge: requested {requested:e}, achieved {achieved:e}")]
    QuadratureNoConvergence { requested: f64, achieved: f64 },

    /// All defects sit at round-off; no order can be fitted.
    #[error("order indeterminate: {0}")]
    OrderIndeterminate(String),
}
