//! Discrete-time signal temporal logic.
//!
//! Formulas are built from real-valued state expressions compared with `<=`,
//! boolean connectives and the bounded temporal operators `F`, `G` and `U`.
//! A [`Trace`] is a finite sequence of equally spaced states; formulas are
//! evaluated on it either as booleans ([`boolean_sat`]) or quantitatively
//! ([`robustness`]), where a positive value means the formula holds and the
//! magnitude measures by how much.
//!
//! Temporal windows `[t + a, t + b]` are clamped to the last index of the
//! trace. A window that starts past the end cannot be evaluated and yields
//! [`StlError::HorizonExceeded`].

mod expr;
mod formula;
mod monitor;
mod parser;
pub(crate) mod semantics;
mod trace;

pub use expr::Expr;
pub use formula::{Formula, Interval};
pub use monitor::Monitor;
pub use parser::parse_formula;
pub use semantics::{boolean_sat, first_sat_time, robustness};
pub use trace::Trace;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StlError {
    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },
    #[error("state index x{index} out of range for state dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("interval bounds reversed: [{start},{end}]")]
    ReversedInterval { start: usize, end: usize },
    #[error("dist() needs matching, nonempty index and center lists (got {indices} and {centers})")]
    InvalidDist { indices: usize, centers: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("square root of negative value {0}")]
    NegativeSqrt(f64),
    #[error("expression evaluated to a non-finite value")]
    NonFinite,
    #[error("temporal window starting at {start} lies past the last trace index {last}")]
    HorizonExceeded { start: usize, last: usize },
    #[error("time index {t} outside trace of length {len}")]
    TimeOutOfRange { t: usize, len: usize },
    #[error("state of dimension {got} does not match trace dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
}
