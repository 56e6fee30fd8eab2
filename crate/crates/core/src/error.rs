//! Error taxonomy shared by every module of the engine.

use thiserror::Error;

/// Errors raised by coefficient and polynomial arithmetic.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    /// Two scalars from different arithmetic backends met in one operation.
    #[error("mixed scalar backends: {0} vs {1}")]
    BackendMismatch(String, String),

    /// Division by an exact or effective zero.
    #[error("division by zero")]
    DivisionByZero,

    /// The exact backend was asked for a root that does not exist in the
    /// Gaussian-rational field. The caller may retry with the float backend.
    #[error("result requires a radical outside the exact coefficient field")]
    NeedsRadical,

    /// A linear system has no solution.
    #[error("linear system is infeasible")]
    Infeasible,

    /// A substitution left a variable of the polynomial unbound.
    #[error("unbound variable `{0}` in substitution")]
    UnboundVariable(String),

    /// Series inversion of a polynomial whose constant term vanishes.
    #[error("polynomial is not a unit: constant term is zero")]
    NotAUnit,

    /// Requested float precision below the supported minimum.
    #[error("float precision {0} bits is below the minimum of 128")]
    PrecisionTooLow(usize),
}
