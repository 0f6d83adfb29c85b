use std::fmt;

use super::StlError;

/// Real-valued function of a single state vector.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Component `x<i>` of the state.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Sqrt(Box<Expr>),
    Abs(Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
    /// Euclidean distance between the selected components and `center`.
    Dist {
        indices: Vec<usize>,
        center: Vec<f64>,
    },
}

impl Expr {
    pub fn dist(indices: Vec<usize>, center: Vec<f64>) -> Result<Self, StlError> {
        if indices.is_empty() || indices.len() != center.len() {
            return Err(StlError::InvalidDist {
                indices: indices.len(),
                centers: center.len(),
            });
        }
        Ok(Expr::Dist { indices, center })
    }

    /// Evaluates the expression on one state. Domain errors are reported
    /// instead of producing NaN.
    pub fn eval(&self, state: &[f64]) -> Result<f64, StlError> {
        let value = match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => *state.get(*i).ok_or(StlError::IndexOutOfRange {
                index: *i,
                dim: state.len(),
            })?,
            Expr::Neg(e) => -e.eval(state)?,
            Expr::Add(a, b) => a.eval(state)? + b.eval(state)?,
            Expr::Sub(a, b) => a.eval(state)? - b.eval(state)?,
            Expr::Mul(a, b) => a.eval(state)? * b.eval(state)?,
            Expr::Div(a, b) => {
                let num = a.eval(state)?;
                let den = b.eval(state)?;
                if den == 0.0 {
                    return Err(StlError::DivisionByZero);
                }
                num / den
            }
            Expr::Sqrt(e) => {
                let v = e.eval(state)?;
                if v < 0.0 {
                    return Err(StlError::NegativeSqrt(v));
                }
                v.sqrt()
            }
            Expr::Abs(e) => e.eval(state)?.abs(),
            Expr::Min(a, b) => a.eval(state)?.min(b.eval(state)?),
            Expr::Max(a, b) => a.eval(state)?.max(b.eval(state)?),
            Expr::Dist { indices, center } => {
                let mut acc = 0.0;
                for (&i, &c) in indices.iter().zip(center) {
                    let x = *state.get(i).ok_or(StlError::IndexOutOfRange {
                        index: i,
                        dim: state.len(),
                    })?;
                    acc += (x - c) * (x - c);
                }
                acc.sqrt()
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(StlError::NonFinite)
        }
    }

    /// Largest state index referenced, if any.
    pub fn max_index(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(e) | Expr::Sqrt(e) | Expr::Abs(e) => e.max_index(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Min(a, b)
            | Expr::Max(a, b) => match (a.max_index(), b.max_index()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
            Expr::Dist { indices, .. } => indices.iter().copied().max(),
        }
    }
}

/// Writes a float so that the parser reads back the identical value.
pub(super) fn write_number(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    write!(f, "{v:?}")
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write_number(f, *c),
            Expr::Var(i) => write!(f, "x{i}"),
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Sqrt(e) => write!(f, "sqrt({e})"),
            Expr::Abs(e) => write!(f, "abs({e})"),
            Expr::Min(a, b) => write!(f, "min({a}, {b})"),
            Expr::Max(a, b) => write!(f, "max({a}, {b})"),
            Expr::Dist { indices, center } => {
                write!(f, "dist(")?;
                for (k, i) in indices.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "x{i}")?;
                }
                write!(f, ";")?;
                for (k, c) in center.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write_number(f, *c)?;
                }
                write!(f, ")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_ignores_state() {
        assert_eq!(Expr::Const(3.5).eval(&[1.0, 2.0]).unwrap(), 3.5);
    }

    #[test]
    fn dist_at_center_is_zero() {
        let e = Expr::dist(vec![0, 1], vec![1.0, 1.0]).unwrap();
        assert_eq!(e.eval(&[1.0, 1.0, 9.0]).unwrap(), 0.0);
    }

    #[test]
    fn dist_three_four_five() {
        let e = Expr::dist(vec![0, 1], vec![0.0, 0.0]).unwrap();
        assert_eq!(e.eval(&[3.0, 4.0]).unwrap(), 5.0);
    }

    #[test]
    fn domain_errors_are_reported() {
        let div = Expr::Div(Box::new(Expr::Const(1.0)), Box::new(Expr::Var(0)));
        assert_eq!(div.eval(&[0.0]), Err(StlError::DivisionByZero));
        let sqrt = Expr::Sqrt(Box::new(Expr::Var(0)));
        assert_eq!(sqrt.eval(&[-4.0]), Err(StlError::NegativeSqrt(-4.0)));
        assert!(matches!(
            Expr::Var(3).eval(&[0.0]),
            Err(StlError::IndexOutOfRange { index: 3, dim: 1 })
        ));
    }

    #[test]
    fn dist_rejects_mismatched_lists() {
        assert!(Expr::dist(vec![0, 1], vec![0.0]).is_err());
        assert!(Expr::dist(vec![], vec![]).is_err());
    }
}
