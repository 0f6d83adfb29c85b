//! Off-policy actor-critic agents.
//!
//! DDPG, TD3 and SAC share one [`Agent`] type. Networks act in a normalized
//! action space `[-1, 1]^m`; [`Agent::select_action`] rescales to the
//! environment's action box. The replay buffer stores normalized actions.

mod agent;
mod buffer;

pub use agent::{Agent, UpdateStats};
pub use buffer::{Batch, ReplayBuffer, Transition};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nn::{Mlp, NnError};

#[derive(Debug, Error)]
pub enum RlError {
    #[error("invalid agent config: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("cannot sample {wanted} transitions from a buffer holding {have}")]
    Underfull { wanted: usize, have: usize },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error(transparent)]
    Nn(#[from] NnError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algo {
    Ddpg,
    Td3,
    Sac,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Ddpg => "ddpg",
            Algo::Td3 => "td3",
            Algo::Sac => "sac",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyMode {
    /// Temperature tuned toward a target entropy.
    #[default]
    Auto,
    /// Temperature held at [`AgentConfig::alpha`].
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMode {
    /// One gradient update per environment step.
    #[default]
    PerStep,
    /// All of an episode's updates run after the episode ends.
    EndOfEpisode,
}

fn default_gamma() -> f64 {
    0.99
}
fn default_tau() -> f64 {
    5e-3
}
fn default_capacity() -> usize {
    1_000_000
}
fn default_warmup() -> usize {
    1000
}
fn default_noise() -> f64 {
    0.2
}
fn default_one() -> f64 {
    1.0
}
fn default_delay() -> usize {
    2
}
fn default_target_noise() -> f64 {
    0.2
}
fn default_noise_clip() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub algo: Algo,
    /// Learning rate of every optimizer; 1e-3 for DDPG and 3e-4 otherwise when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lr: Option<f64>,
    /// 100 for DDPG/TD3 and 256 for SAC when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    /// Hidden layer widths; (400, 300) for DDPG/TD3 and (256, 256) for SAC when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden: Option<Vec<usize>>,
    #[serde(default = "default_capacity")]
    pub buffer_capacity: usize,
    /// Environment steps with uniform random actions before learning starts.
    #[serde(default = "default_warmup")]
    pub warmup: usize,
    /// Gaussian exploration noise for DDPG/TD3 in normalized action units;
    /// the default 0.2 is a tenth of the action range.
    #[serde(default = "default_noise")]
    pub exploration_noise: f64,
    #[serde(default)]
    pub entropy: EntropyMode,
    /// Initial (auto) or constant (fixed) SAC temperature.
    #[serde(default = "default_one")]
    pub alpha: f64,
    /// Defaults to `-action_dim`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_entropy: Option<f64>,
    /// Multiplies rewards before they enter the critic targets.
    #[serde(default = "default_one")]
    pub reward_scale: f64,
    #[serde(default)]
    pub update_mode: UpdateMode,
    /// TD3 actor and target update period.
    #[serde(default = "default_delay")]
    pub policy_delay: usize,
    /// TD3 target policy smoothing noise and its clip.
    #[serde(default = "default_target_noise")]
    pub target_noise: f64,
    #[serde(default = "default_noise_clip")]
    pub noise_clip: f64,
}

impl AgentConfig {
    pub fn new(algo: Algo) -> Self {
        Self {
            algo,
            lr: None,
            batch_size: None,
            gamma: default_gamma(),
            tau: default_tau(),
            hidden: None,
            buffer_capacity: default_capacity(),
            warmup: default_warmup(),
            exploration_noise: default_noise(),
            entropy: EntropyMode::Auto,
            alpha: 1.0,
            target_entropy: None,
            reward_scale: 1.0,
            update_mode: UpdateMode::PerStep,
            policy_delay: default_delay(),
            target_noise: default_target_noise(),
            noise_clip: default_noise_clip(),
        }
    }

    pub fn lr(&self) -> f64 {
        self.lr.unwrap_or(match self.algo {
            Algo::Ddpg => 1e-3,
            Algo::Td3 | Algo::Sac => 3e-4,
        })
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size.unwrap_or(match self.algo {
            Algo::Ddpg | Algo::Td3 => 100,
            Algo::Sac => 256,
        })
    }

    pub fn hidden(&self) -> Vec<usize> {
        self.hidden.clone().unwrap_or_else(|| match self.algo {
            Algo::Ddpg | Algo::Td3 => vec![400, 300],
            Algo::Sac => vec![256, 256],
        })
    }

    pub fn validate(&self) -> Result<(), RlError> {
        let bad = |m: &str| Err(RlError::Config(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("tau must lie in (0, 1]");
        }
        if !(self.lr() > 0.0 && self.lr().is_finite()) {
            return bad("lr must be positive");
        }
        if self.batch_size() == 0 || self.batch_size() > self.buffer_capacity {
            return bad("batch_size must be positive and at most buffer_capacity");
        }
        if self.hidden().contains(&0) {
            return bad("hidden widths must be positive");
        }
        if !(self.exploration_noise >= 0.0) || !(self.target_noise >= 0.0) || !(self.noise_clip >= 0.0) {
            return bad("noise scales must be nonnegative");
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be nonnegative");
        }
        if self.entropy == EntropyMode::Auto && self.alpha == 0.0 {
            return bad("auto-tuned alpha needs a positive initial value");
        }
        if !(self.reward_scale > 0.0 && self.reward_scale.is_finite()) {
            return bad("reward_scale must be positive");
        }
        if self.policy_delay == 0 {
            return bad("policy_delay must be positive");
        }
        Ok(())
    }
}

/// `target <- (1 - tau) * target + tau * online`.
pub fn soft_update(target: &mut Mlp, online: &Mlp, tau: f64) {
    target.soft_update_from(online, tau);
}

/// Deterministic state-feedback controller producing actions in
/// environment units.
pub trait Policy {
    fn action(&self, s: &[f64]) -> Result<Vec<f64>, RlError>;
}

impl<F> Policy for F
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    fn action(&self, s: &[f64]) -> Result<Vec<f64>, RlError> {
        Ok(self(s))
    }
}
