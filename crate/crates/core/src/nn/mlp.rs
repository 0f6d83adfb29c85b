use std::fs;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::NnError;

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: &mut [f64]) {
        match self {
            Activation::Identity => {}
            Activation::Relu => z.iter_mut().for_each(|v| *v = v.max(0.0)),
            Activation::Tanh => z.iter_mut().for_each(|v| *v = v.tanh()),
        }
    }

    /// Multiplies `grad` by the derivative, expressed through the output `y`.
    fn backprop(self, y: &[f64], grad: &mut [f64]) {
        match self {
            Activation::Identity => {}
            Activation::Relu => {
                for (g, &y) in grad.iter_mut().zip(y) {
                    if y <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            Activation::Tanh => {
                for (g, &y) in grad.iter_mut().zip(y) {
                    *g *= 1.0 - y * y;
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    hidden: Activation,
    output: Activation,
    params: Vec<f64>,
}

/// Layer outputs of a batched forward pass, kept for [`Mlp::backward`].
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    batch: usize,
    /// `acts[0]` is the input; `acts[l + 1]` the output of layer `l`.
    acts: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Network output, `batch x out` row-major.
    pub fn output(&self) -> &[f64] {
        self.acts.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    #[serde(flatten)]
    mlp: Mlp,
}

/// `c = alpha * a b + beta * c` with explicit row/column strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (isize, isize),
    b: &[f64],
    (rsb, csb): (isize, isize),
    beta: f64,
    c: &mut [f64],
) {
    if m == 0 || n == 0 {
        return;
    }
    debug_assert!(c.len() >= m * n);
    // SAFETY: the callers pass slices whose lengths cover every index
    // reachable from the given shapes and strides; `c` is exclusively borrowed.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

impl Mlp {
    /// Weights uniform in `±1/sqrt(fan_in)`, zero biases.
    pub fn new(sizes: &[usize], hidden: Activation, output: Activation, seed: u64) -> Result<Self, NnError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::with_rng(sizes, hidden, output, &mut rng)
    }

    pub fn with_rng<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut R,
    ) -> Result<Self, NnError> {
        if sizes.len() < 2 {
            return Err(NnError::TooFewLayers);
        }
        if sizes.contains(&0) {
            return Err(NnError::ZeroWidth);
        }
        let mut params = Vec::with_capacity(Self::count(sizes));
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| rng.random_range(-bound..bound)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            hidden,
            output,
            params,
        })
    }

    /// Builds a network from explicit parameters in the flat layout.
    pub fn from_params(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        params: Vec<f64>,
    ) -> Result<Self, NnError> {
        if sizes.len() < 2 {
            return Err(NnError::TooFewLayers);
        }
        if sizes.contains(&0) {
            return Err(NnError::ZeroWidth);
        }
        let expected = Self::count(sizes);
        if params.len() != expected {
            return Err(NnError::Shape {
                expected,
                got: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(NnError::NonFinite("parameters"));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            hidden,
            output,
            params,
        })
    }

    fn count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    fn layers(&self) -> usize {
        self.sizes.len() - 1
    }

    fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers() {
            self.output
        } else {
            self.hidden
        }
    }

    /// Offsets of `W` and `b` for layer `l`.
    fn offsets(&self, l: usize) -> (usize, usize) {
        let mut off = 0;
        for w in self.sizes.windows(2).take(l) {
            off += w[0] * w[1] + w[1];
        }
        (off, off + self.sizes[l] * self.sizes[l + 1])
    }

    /// Output for a single input vector.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>, NnError> {
        let mut cache = ForwardCache::default();
        self.forward(x, 1, &mut cache)?;
        Ok(cache.acts.pop().unwrap())
    }

    /// Batched forward pass over `batch` row-major inputs.
    pub fn forward(&self, x: &[f64], batch: usize, cache: &mut ForwardCache) -> Result<(), NnError> {
        let expected = batch * self.input_dim();
        if x.len() != expected {
            return Err(NnError::Shape { expected, got: x.len() });
        }
        cache.batch = batch;
        cache.acts.resize_with(self.sizes.len(), Vec::new);
        cache.acts[0].clear();
        cache.acts[0].extend_from_slice(x);
        for l in 0..self.layers() {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let (w_off, b_off) = self.offsets(l);
            let w = &self.params[w_off..b_off];
            let b = &self.params[b_off..b_off + fan_out];
            let (prev, rest) = cache.acts.split_at_mut(l + 1);
            let input = &prev[l];
            let out = &mut rest[0];
            out.clear();
            for _ in 0..batch {
                out.extend_from_slice(b);
            }
            // out (B x out) += input (B x in) * W^T (in x out)
            gemm(
                batch,
                fan_in,
                fan_out,
                input,
                (fan_in as isize, 1),
                w,
                (1, fan_in as isize),
                1.0,
                out,
            );
            self.activation(l).apply(out);
        }
        Ok(())
    }

    /// Backpropagates `dy` (gradient of the loss with respect to the output,
    /// `batch x out`). Parameter gradients are **added** to `grads` when given;
    /// the gradient with respect to the input is returned.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        dy: &[f64],
        mut grads: Option<&mut [f64]>,
    ) -> Result<Vec<f64>, NnError> {
        let batch = cache.batch;
        if cache.acts.len() != self.sizes.len() || cache.acts[0].len() != batch * self.input_dim() {
            return Err(NnError::Shape {
                expected: batch * self.input_dim(),
                got: cache.acts.first().map_or(0, Vec::len),
            });
        }
        if dy.len() != batch * self.output_dim() {
            return Err(NnError::Shape {
                expected: batch * self.output_dim(),
                got: dy.len(),
            });
        }
        if let Some(g) = grads.as_deref() {
            if g.len() != self.params.len() {
                return Err(NnError::Shape {
                    expected: self.params.len(),
                    got: g.len(),
                });
            }
        }
        let mut dz = dy.to_vec();
        for l in (0..self.layers()).rev() {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let (w_off, b_off) = self.offsets(l);
            self.activation(l).backprop(&cache.acts[l + 1], &mut dz);
            let input = &cache.acts[l];
            if let Some(g) = grads.as_deref_mut() {
                // dW (out x in) += dz^T (out x B) * input (B x in)
                gemm(
                    fan_out,
                    batch,
                    fan_in,
                    &dz,
                    (1, fan_out as isize),
                    input,
                    (fan_in as isize, 1),
                    1.0,
                    &mut g[w_off..b_off],
                );
                let db = &mut g[b_off..b_off + fan_out];
                for row in dz.chunks_exact(fan_out) {
                    for (d, v) in db.iter_mut().zip(row) {
                        *d += v;
                    }
                }
            }
            // dx (B x in) = dz (B x out) * W (out x in)
            let mut dx = vec![0.0; batch * fan_in];
            gemm(
                batch,
                fan_out,
                fan_in,
                &dz,
                (fan_out as isize, 1),
                &self.params[w_off..b_off],
                (fan_in as isize, 1),
                0.0,
                &mut dx,
            );
            dz = dx;
        }
        Ok(dz)
    }

    /// `self <- (1 - tau) * self + tau * online`, parameter-wise.
    pub fn soft_update_from(&mut self, online: &Mlp, tau: f64) {
        assert_eq!(
            self.params.len(),
            online.params.len(),
            "soft update between different shapes"
        );
        if tau == 1.0 {
            self.params.copy_from_slice(&online.params);
            return;
        }
        for (t, o) in self.params.iter_mut().zip(&online.params) {
            *t = (1.0 - tau) * *t + tau * o;
        }
    }

    pub fn to_json(&self) -> Result<String, NnError> {
        Ok(serde_json::to_string(&Checkpoint {
            version: CHECKPOINT_VERSION,
            mlp: self.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self, NnError> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(NnError::Version(ck.version));
        }
        let m = ck.mlp;
        Self::from_params(&m.sizes, m.hidden, m.output, m.params)
    }

    pub fn save(&self, path: &Path) -> Result<(), NnError> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, NnError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
