use super::semantics::{fmax, fmin, Window};
use super::{Expr, Formula, Interval, StlError, Trace};

#[derive(Debug, Clone)]
enum Node {
    True,
    Pred(Expr, Expr),
    Not(usize),
    And(usize, usize),
    Or(usize, usize),
    Finally(Interval, usize),
    Globally(Interval, usize),
    Until(Interval, usize, usize),
}

/// Robustness evaluator that caches every `(subformula, time)` value, so that
/// evaluating a formula at all times of a trace costs one pass per node and
/// window. Results are bit-identical to [`super::robustness`], including which
/// error is reported.
#[derive(Debug, Clone)]
pub struct Monitor {
    formula: Formula,
    nodes: Vec<Node>,
    root: usize,
}

type Memo = Vec<Option<Result<f64, StlError>>>;

impl Monitor {
    pub fn new(formula: &Formula) -> Self {
        let mut nodes = Vec::with_capacity(formula.size());
        let root = flatten(formula, &mut nodes);
        Self {
            formula: formula.clone(),
            nodes,
            root,
        }
    }

    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    /// Robustness at time `t`.
    pub fn robustness(&self, tr: &Trace, t: usize) -> Result<f64, StlError> {
        let w = Window::full(tr);
        w.check_time(t)?;
        let mut memo = vec![None; self.nodes.len() * w.len()];
        self.eval(w, &mut memo, self.root, t)
    }

    /// Robustness at every time index of the trace, sharing one cache.
    pub fn robustness_all(&self, tr: &Trace) -> Vec<Result<f64, StlError>> {
        let w = Window::full(tr);
        let mut memo = vec![None; self.nodes.len() * w.len()];
        (0..w.len()).map(|t| self.eval(w, &mut memo, self.root, t)).collect()
    }

    fn eval(&self, w: Window<'_>, memo: &mut Memo, id: usize, t: usize) -> Result<f64, StlError> {
        let slot = id * w.len() + t;
        if let Some(v) = &memo[slot] {
            return v.clone();
        }
        let v = self.compute(w, memo, id, t);
        memo[slot] = Some(v.clone());
        v
    }

    fn compute(&self, w: Window<'_>, memo: &mut Memo, id: usize, t: usize) -> Result<f64, StlError> {
        match &self.nodes[id] {
            Node::True => Ok(f64::INFINITY),
            Node::Pred(lhs, rhs) => {
                let s = w.state(t);
                let l = lhs.eval(s)?;
                let r = rhs.eval(s)?;
                Ok(r - l)
            }
            Node::Not(p) => Ok(-self.eval(w, memo, *p, t)?),
            Node::And(a, b) => {
                let x = self.eval(w, memo, *a, t)?;
                let y = self.eval(w, memo, *b, t)?;
                Ok(fmin(x, y))
            }
            Node::Or(a, b) => {
                let x = self.eval(w, memo, *a, t)?;
                let y = self.eval(w, memo, *b, t)?;
                Ok(fmax(x, y))
            }
            Node::Finally(interval, body) => {
                let (start, end) = w.span(t, interval)?;
                let mut best = f64::NEG_INFINITY;
                for tp in start..=end {
                    best = fmax(best, self.eval(w, memo, *body, tp)?);
                }
                Ok(best)
            }
            Node::Globally(interval, body) => {
                let (start, end) = w.span(t, interval)?;
                let mut worst = f64::INFINITY;
                for tp in start..=end {
                    worst = fmin(worst, self.eval(w, memo, *body, tp)?);
                }
                Ok(worst)
            }
            Node::Until(interval, lhs, rhs) => {
                let (start, end) = w.span(t, interval)?;
                let mut best = f64::NEG_INFINITY;
                for tp in start..=end {
                    let mut v = self.eval(w, memo, *rhs, tp)?;
                    for tpp in t..tp {
                        v = fmin(v, self.eval(w, memo, *lhs, tpp)?);
                    }
                    best = fmax(best, v);
                }
                Ok(best)
            }
        }
    }
}

fn flatten(f: &Formula, nodes: &mut Vec<Node>) -> usize {
    let node = match f {
        Formula::True => Node::True,
        Formula::Pred { lhs, rhs } => Node::Pred(lhs.clone(), rhs.clone()),
        Formula::Not(p) => Node::Not(flatten(p, nodes)),
        Formula::And(a, b) => {
            let a = flatten(a, nodes);
            Node::And(a, flatten(b, nodes))
        }
        Formula::Or(a, b) => {
            let a = flatten(a, nodes);
            Node::Or(a, flatten(b, nodes))
        }
        Formula::Finally { interval, body } => Node::Finally(*interval, flatten(body, nodes)),
        Formula::Globally { interval, body } => Node::Globally(*interval, flatten(body, nodes)),
        Formula::Until { interval, lhs, rhs } => {
            let l = flatten(lhs, nodes);
            Node::Until(*interval, l, flatten(rhs, nodes))
        }
    };
    nodes.push(node);
    nodes.len() - 1
}
