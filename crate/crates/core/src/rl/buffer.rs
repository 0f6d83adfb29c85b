use rand::Rng;

use super::RlError;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub s: Vec<f64>,
    pub a: Vec<f64>,
    pub r: f64,
    pub s_next: Vec<f64>,
    pub done: bool,
}

/// Minibatch in row-major flat arrays.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Batch {
    pub len: usize,
    pub s: Vec<f64>,
    pub a: Vec<f64>,
    pub r: Vec<f64>,
    pub s_next: Vec<f64>,
    pub done: Vec<f64>,
}

impl Batch {
    pub fn from_transitions(items: &[Transition]) -> Self {
        let mut b = Batch::default();
        for t in items {
            b.s.extend_from_slice(&t.s);
            b.a.extend_from_slice(&t.a);
            b.r.push(t.r);
            b.s_next.extend_from_slice(&t.s_next);
            b.done.push(if t.done { 1.0 } else { 0.0 });
        }
        b.len = items.len();
        b
    }
}

/// Fixed-capacity FIFO store of transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    state_dim: usize,
    action_dim: usize,
    s: Vec<f64>,
    a: Vec<f64>,
    r: Vec<f64>,
    s_next: Vec<f64>,
    done: Vec<f64>,
    len: usize,
    head: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, state_dim: usize, action_dim: usize) -> Result<Self, RlError> {
        if capacity == 0 {
            return Err(RlError::Config("buffer capacity must be positive".into()));
        }
        Ok(Self {
            capacity,
            state_dim,
            action_dim,
            s: Vec::new(),
            a: Vec::new(),
            r: Vec::new(),
            s_next: Vec::new(),
            done: Vec::new(),
            len: 0,
            head: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: &Transition) -> Result<(), RlError> {
        self.push_parts(&t.s, &t.a, t.r, &t.s_next, t.done)
    }

    /// Stores one transition, evicting the oldest once full.
    pub fn push_parts(&mut self, s: &[f64], a: &[f64], r: f64, s_next: &[f64], done: bool) -> Result<(), RlError> {
        if s.len() != self.state_dim || s_next.len() != self.state_dim || a.len() != self.action_dim {
            return Err(RlError::Dimension(format!(
                "transition shapes ({}, {}, {}) do not match ({}, {}, {})",
                s.len(),
                a.len(),
                s_next.len(),
                self.state_dim,
                self.action_dim,
                self.state_dim
            )));
        }
        if !r.is_finite() || s.iter().chain(a).chain(s_next).any(|v| !v.is_finite()) {
            return Err(RlError::NonFinite("transition".into()));
        }
        let d = if done { 1.0 } else { 0.0 };
        if self.len < self.capacity {
            self.s.extend_from_slice(s);
            self.a.extend_from_slice(a);
            self.r.push(r);
            self.s_next.extend_from_slice(s_next);
            self.done.push(d);
            self.len += 1;
        } else {
            let i = self.head;
            let (n, m) = (self.state_dim, self.action_dim);
            self.s[i * n..(i + 1) * n].copy_from_slice(s);
            self.a[i * m..(i + 1) * m].copy_from_slice(a);
            self.r[i] = r;
            self.s_next[i * n..(i + 1) * n].copy_from_slice(s_next);
            self.done[i] = d;
        }
        self.head = (self.head + 1) % self.capacity;
        Ok(())
    }

    /// Transition at storage slot `i` (not age order).
    pub fn get(&self, i: usize) -> Option<Transition> {
        if i >= self.len {
            return None;
        }
        let (n, m) = (self.state_dim, self.action_dim);
        Some(Transition {
            s: self.s[i * n..(i + 1) * n].to_vec(),
            a: self.a[i * m..(i + 1) * m].to_vec(),
            r: self.r[i],
            s_next: self.s_next[i * n..(i + 1) * n].to_vec(),
            done: self.done[i] != 0.0,
        })
    }

    /// Uniform sample of `n` distinct transitions.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R, out: &mut Batch) -> Result<(), RlError> {
        if n == 0 || n > self.len {
            return Err(RlError::Underfull {
                wanted: n,
                have: self.len,
            });
        }
        let (sd, ad) = (self.state_dim, self.action_dim);
        out.len = n;
        out.s.clear();
        out.a.clear();
        out.r.clear();
        out.s_next.clear();
        out.done.clear();
        for i in rand::seq::index::sample(rng, self.len, n) {
            out.s.extend_from_slice(&self.s[i * sd..(i + 1) * sd]);
            out.a.extend_from_slice(&self.a[i * ad..(i + 1) * ad]);
            out.r.push(self.r[i]);
            out.s_next.extend_from_slice(&self.s_next[i * sd..(i + 1) * sd]);
            out.done.push(self.done[i]);
        }
        Ok(())
    }
}
