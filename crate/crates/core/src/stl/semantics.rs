use super::{Formula, Interval, StlError, Trace};

/// `max` without the NaN special cases of `f64::max`, so that the direct
/// evaluator and [`super::Monitor`] agree bit for bit.
#[inline]
pub(super) fn fmax(a: f64, b: f64) -> f64 {
    if b > a {
        b
    } else {
        a
    }
}

#[inline]
pub(super) fn fmin(a: f64, b: f64) -> f64 {
    if b < a {
        b
    } else {
        a
    }
}

/// Contiguous run of trace states `offset .. offset + len`, re-indexed from 0.
#[derive(Clone, Copy)]
pub(crate) struct Window<'a> {
    trace: &'a Trace,
    offset: usize,
    len: usize,
}

impl<'a> Window<'a> {
    pub(crate) fn full(trace: &'a Trace) -> Self {
        Self {
            trace,
            offset: 0,
            len: trace.len(),
        }
    }

    /// States `start ..= end` of `trace`.
    pub(crate) fn new(trace: &'a Trace, start: usize, end: usize) -> Result<Self, StlError> {
        if start > end || end >= trace.len() {
            return Err(StlError::TimeOutOfRange {
                t: end.max(start),
                len: trace.len(),
            });
        }
        Ok(Self {
            trace,
            offset: start,
            len: end - start + 1,
        })
    }

    pub(super) fn len(&self) -> usize {
        self.len
    }

    pub(super) fn state(&self, t: usize) -> &'a [f64] {
        self.trace.state(self.offset + t)
    }

    pub(super) fn check_time(&self, t: usize) -> Result<(), StlError> {
        if self.len == 0 || t >= self.len {
            return Err(StlError::TimeOutOfRange { t, len: self.len });
        }
        Ok(())
    }

    /// Clamped window `[t + a, min(t + b, last)]`.
    pub(super) fn span(&self, t: usize, interval: &Interval) -> Result<(usize, usize), StlError> {
        let last = self.len - 1;
        let start = t + interval.start();
        if start > last {
            return Err(StlError::HorizonExceeded { start, last });
        }
        Ok((start, (t + interval.end()).min(last)))
    }
}

/// Quantitative robustness of `phi` on `tr` at time `t`.
pub fn robustness(tr: &Trace, t: usize, phi: &Formula) -> Result<f64, StlError> {
    robustness_in(Window::full(tr), t, phi)
}

pub(crate) fn robustness_in(w: Window<'_>, t: usize, phi: &Formula) -> Result<f64, StlError> {
    w.check_time(t)?;
    rho(w, t, phi)
}

fn rho(w: Window<'_>, t: usize, phi: &Formula) -> Result<f64, StlError> {
    match phi {
        Formula::True => Ok(f64::INFINITY),
        Formula::Pred { lhs, rhs } => {
            let s = w.state(t);
            let l = lhs.eval(s)?;
            let r = rhs.eval(s)?;
            Ok(r - l)
        }
        Formula::Not(p) => Ok(-rho(w, t, p)?),
        Formula::And(a, b) => {
            let x = rho(w, t, a)?;
            let y = rho(w, t, b)?;
            Ok(fmin(x, y))
        }
        Formula::Or(a, b) => {
            let x = rho(w, t, a)?;
            let y = rho(w, t, b)?;
            Ok(fmax(x, y))
        }
        Formula::Finally { interval, body } => {
            let (start, end) = w.span(t, interval)?;
            let mut best = f64::NEG_INFINITY;
            for tp in start..=end {
                best = fmax(best, rho(w, tp, body)?);
            }
            Ok(best)
        }
        Formula::Globally { interval, body } => {
            let (start, end) = w.span(t, interval)?;
            let mut worst = f64::INFINITY;
            for tp in start..=end {
                worst = fmin(worst, rho(w, tp, body)?);
            }
            Ok(worst)
        }
        Formula::Until { interval, lhs, rhs } => {
            let (start, end) = w.span(t, interval)?;
            let mut best = f64::NEG_INFINITY;
            for tp in start..=end {
                let mut v = rho(w, tp, rhs)?;
                for tpp in t..tp {
                    v = fmin(v, rho(w, tpp, lhs)?);
                }
                best = fmax(best, v);
            }
            Ok(best)
        }
    }
}

/// Classical satisfaction of `phi` on `tr` at time `t`.
pub fn boolean_sat(tr: &Trace, t: usize, phi: &Formula) -> Result<bool, StlError> {
    sat_in(Window::full(tr), t, phi)
}

pub(crate) fn sat_in(w: Window<'_>, t: usize, phi: &Formula) -> Result<bool, StlError> {
    w.check_time(t)?;
    sat(w, t, phi)
}

fn sat(w: Window<'_>, t: usize, phi: &Formula) -> Result<bool, StlError> {
    match phi {
        Formula::True => Ok(true),
        Formula::Pred { lhs, rhs } => {
            let s = w.state(t);
            let l = lhs.eval(s)?;
            let r = rhs.eval(s)?;
            Ok(l <= r)
        }
        Formula::Not(p) => Ok(!sat(w, t, p)?),
        Formula::And(a, b) => {
            let x = sat(w, t, a)?;
            let y = sat(w, t, b)?;
            Ok(x && y)
        }
        Formula::Or(a, b) => {
            let x = sat(w, t, a)?;
            let y = sat(w, t, b)?;
            Ok(x || y)
        }
        Formula::Finally { interval, body } => {
            let (start, end) = w.span(t, interval)?;
            let mut any = false;
            for tp in start..=end {
                any |= sat(w, tp, body)?;
            }
            Ok(any)
        }
        Formula::Globally { interval, body } => {
            let (start, end) = w.span(t, interval)?;
            let mut all = true;
            for tp in start..=end {
                all &= sat(w, tp, body)?;
            }
            Ok(all)
        }
        Formula::Until { interval, lhs, rhs } => {
            let (start, end) = w.span(t, interval)?;
            let mut any = false;
            for tp in start..=end {
                let mut v = sat(w, tp, rhs)?;
                for tpp in t..tp {
                    v &= sat(w, tpp, lhs)?;
                }
                any |= v;
            }
            Ok(any)
        }
    }
}

/// Earliest time at which `phi` holds, or `None` if it never does.
/// Evaluation errors at a time step count as "not satisfied" there.
pub fn first_sat_time(tr: &Trace, phi: &Formula) -> Option<usize> {
    let w = Window::full(tr);
    (0..tr.len()).find(|&t| matches!(sat(w, t, phi), Ok(true)))
}
