use std::fmt;

use super::{Expr, StlError};

/// Integer time window `{start, ..., end}` relative to the evaluation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    start: usize,
    end: usize,
}

impl Interval {
    pub fn new(start: usize, end: usize) -> Result<Self, StlError> {
        if start > end {
            return Err(StlError::ReversedInterval { start, end });
        }
        Ok(Self { start, end })
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    True,
    /// `lhs <= rhs`; robustness is `rhs - lhs`.
    Pred {
        lhs: Expr,
        rhs: Expr,
    },
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Until {
        interval: Interval,
        lhs: Box<Formula>,
        rhs: Box<Formula>,
    },
    Finally {
        interval: Interval,
        body: Box<Formula>,
    },
    Globally {
        interval: Interval,
        body: Box<Formula>,
    },
}

impl Formula {
    pub fn le(lhs: Expr, rhs: Expr) -> Self {
        Formula::Pred { lhs, rhs }
    }

    pub fn ge(lhs: Expr, rhs: Expr) -> Self {
        Formula::Pred { lhs: rhs, rhs: lhs }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(phi: Formula) -> Self {
        Formula::Not(Box::new(phi))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn until(interval: Interval, lhs: Formula, rhs: Formula) -> Self {
        Formula::Until {
            interval,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn finally(interval: Interval, body: Formula) -> Self {
        Formula::Finally {
            interval,
            body: Box::new(body),
        }
    }

    pub fn globally(interval: Interval, body: Formula) -> Self {
        Formula::Globally {
            interval,
            body: Box::new(body),
        }
    }

    /// Largest state index referenced anywhere in the formula.
    pub fn max_index(&self) -> Option<usize> {
        match self {
            Formula::True => None,
            Formula::Pred { lhs, rhs } => match (lhs.max_index(), rhs.max_index()) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            },
            Formula::Not(f) => f.max_index(),
            Formula::Finally { body, .. } | Formula::Globally { body, .. } => body.max_index(),
            Formula::And(a, b) | Formula::Or(a, b) => match (a.max_index(), b.max_index()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
            Formula::Until { lhs, rhs, .. } => match (lhs.max_index(), rhs.max_index()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    /// Checks every referenced state index against `state_dim`.
    pub fn check_dim(&self, state_dim: usize) -> Result<(), StlError> {
        match self.max_index() {
            Some(index) if index >= state_dim => Err(StlError::IndexOutOfRange { index, dim: state_dim }),
            _ => Ok(()),
        }
    }

    /// Longest look-ahead, in steps, needed to evaluate the formula at one time.
    pub fn horizon(&self) -> usize {
        match self {
            Formula::True | Formula::Pred { .. } => 0,
            Formula::Not(f) => f.horizon(),
            Formula::And(a, b) | Formula::Or(a, b) => a.horizon().max(b.horizon()),
            Formula::Finally { interval, body } | Formula::Globally { interval, body } => interval.end + body.horizon(),
            Formula::Until { interval, lhs, rhs } => interval.end + lhs.horizon().max(rhs.horizon()),
        }
    }

    /// Number of nodes in the syntax tree.
    pub fn size(&self) -> usize {
        match self {
            Formula::True | Formula::Pred { .. } => 1,
            Formula::Not(f) => 1 + f.size(),
            Formula::Finally { body, .. } | Formula::Globally { body, .. } => 1 + body.size(),
            Formula::And(a, b) | Formula::Or(a, b) => 1 + a.size() + b.size(),
            Formula::Until { lhs, rhs, .. } => 1 + lhs.size() + rhs.size(),
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.start, self.end)
    }
}

/// Fully parenthesized output accepted by [`super::parse_formula`].
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::Pred { lhs, rhs } => write!(f, "{lhs} <= {rhs}"),
            Formula::Not(p) => write!(f, "!({p})"),
            Formula::And(a, b) => write!(f, "({a} && {b})"),
            Formula::Or(a, b) => write!(f, "({a} || {b})"),
            Formula::Until { interval, lhs, rhs } => write!(f, "({lhs}) U{interval} ({rhs})"),
            Formula::Finally { interval, body } => write!(f, "F{interval}({body})"),
            Formula::Globally { interval, body } => write!(f, "G{interval}({body})"),
        }
    }
}
