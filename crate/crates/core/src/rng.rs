//! Named random streams derived from one master seed.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent sampling sites of a run. Each gets its own ChaCha stream so
/// that, for example, changing how many evaluation episodes run never shifts
/// the initial states drawn during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Episode lengths.
    Env,
    /// Exploration noise, warmup actions, minibatch sampling.
    Agent,
    /// Initial states during training.
    Init,
    /// Initial states during evaluation.
    Eval,
    /// Random tabular MDPs.
    Mdp,
    /// Network initialization.
    Weights,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Env => 1,
            Stream::Agent => 2,
            Stream::Init => 3,
            Stream::Eval => 4,
            Stream::Mdp => 5,
            Stream::Weights => 6,
        }
    }
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which.id());
    rng
}
