//! Fully connected networks with hand-written backpropagation.
//!
//! Parameters of an [`Mlp`] live in one flat vector, laid out layer by layer
//! as `[W (out x in, row-major), b (out)]`, so optimizers, soft target
//! updates and checkpoints operate on plain slices.

mod adam;
mod mlp;

pub use adam::Adam;
pub use mlp::{Activation, ForwardCache, Mlp};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("an MLP needs at least an input and an output size")]
    TooFewLayers,
    #[error("layer sizes must be positive")]
    ZeroWidth,
    #[error("expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint format: {0}")]
    Format(#[from] serde_json::Error),
}

/// Largest relative error between analytic and central-difference gradients
/// of the scalar loss `sum(c * mlp(x))` for fixed random weights `c`, over
/// every parameter and every input. Relative errors use
/// `|a - n| / max(|a|, |n|, 1e-4)`.
pub fn gradient_check(mlp: &Mlp, x: &[f64], batch: usize, h: f64, seed: u64) -> Result<f64, NnError> {
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let coef: Vec<f64> = (0..batch * mlp.output_dim())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let loss = |m: &Mlp, x: &[f64]| -> Result<f64, NnError> {
        let mut cache = ForwardCache::default();
        m.forward(x, batch, &mut cache)?;
        Ok(cache.output().iter().zip(&coef).map(|(y, c)| y * c).sum())
    };
    let mut cache = ForwardCache::default();
    mlp.forward(x, batch, &mut cache)?;
    let mut grads = vec![0.0; mlp.num_params()];
    let dx = mlp.backward(&cache, &coef, Some(&mut grads))?;

    let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-4);
    let mut worst: f64 = 0.0;
    let mut probe = mlp.clone();
    for i in 0..mlp.num_params() {
        let p = mlp.params()[i];
        probe.params_mut()[i] = p + h;
        let up = loss(&probe, x)?;
        probe.params_mut()[i] = p - h;
        let down = loss(&probe, x)?;
        probe.params_mut()[i] = p;
        worst = worst.max(rel(grads[i], (up - down) / (2.0 * h)));
    }
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        xp[i] = x[i] + h;
        let up = loss(mlp, &xp)?;
        xp[i] = x[i] - h;
        let down = loss(mlp, &xp)?;
        xp[i] = x[i];
        worst = worst.max(rel(dx[i], (up - down) / (2.0 * h)));
    }
    Ok(worst)
}
