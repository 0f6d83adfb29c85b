//! Training loops: plain reach training and the recovery variant that ends
//! an episode as soon as the unsafe set is entered.
//!
//! Each episode draws a length `k` uniformly from `k_min..=k_max` and an
//! initial state from the initial box, then collects `k` transitions. Every
//! transition counts as one training sample; a run stops after `m` samples,
//! truncating the last episode if needed. Reaching the target does not end an
//! episode and time-limit truncation never sets `done`; only entering the
//! unsafe set does. Rewards reach the learner multiplied by the agent's
//! `reward_scale` and the reward spec's normalization factor; logged returns
//! are unscaled.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{dist_to_ball, in_ball, sample_initial, Env, EnvError, EnvSpec};
use crate::reward::{RewardError, RewardMode, RewardSpec};
use crate::rl::{Agent, AgentConfig, Batch, Policy, ReplayBuffer, RlError, UpdateMode};
use crate::rng::{stream, Stream};
use crate::stl::{Formula, StlError, Trace};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Rl(#[from] RlError),
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error(transparent)]
    Stl(#[from] StlError),
    #[error("training log: {0}")]
    Csv(#[from] csv::Error),
    #[error("training log: {0}")]
    Io(#[from] std::io::Error),
}

/// Which state a step's reward looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardTiming {
    /// Reward of transition `t` is evaluated at `t` on the prefix `s_0..s_t`.
    #[default]
    Pre,
    /// Reward of transition `t` is evaluated at `t + 1` on `s_0..s_{t+1}`.
    Post,
}

fn default_k() -> usize {
    30
}

fn default_m() -> usize {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainerParams {
    #[serde(default = "default_k")]
    pub k_min: usize,
    #[serde(default = "default_k")]
    pub k_max: usize,
    /// Total transitions collected.
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub reward_timing: RewardTiming,
    /// Calls the progress hook every this many samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_every: Option<usize>,
}

impl Default for TrainerParams {
    fn default() -> Self {
        Self {
            k_min: default_k(),
            k_max: default_k(),
            m: default_m(),
            seed: 0,
            reward_timing: RewardTiming::Pre,
            eval_every: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub env: EnvSpec,
    pub agent: AgentConfig,
    pub reward: RewardSpec,
    pub trainer: TrainerParams,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        self.env.validate()?;
        self.agent.validate()?;
        self.reward.validate()?;
        let t = &self.trainer;
        if t.k_min == 0 || t.k_min > t.k_max {
            return Err(TrainError::Config(format!(
                "episode lengths need 1 <= k_min <= k_max (got {} and {})",
                t.k_min, t.k_max
            )));
        }
        if t.eval_every == Some(0) {
            return Err(TrainError::Config("eval_every must be positive".into()));
        }
        Ok(())
    }
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    /// Transitions collected in this episode.
    pub steps: usize,
    /// Undiscounted sum of unscaled rewards.
    #[serde(rename = "return")]
    pub ret: f64,
    /// Target-predicate robustness at the last state.
    pub final_rho: f64,
    pub reached: bool,
    /// First step at which the state lies in the target.
    pub steps_to_reach: Option<usize>,
    pub violated: bool,
    /// The episode was cut short because the sample budget ran out.
    pub truncated: bool,
    pub diverged: bool,
}

pub fn write_log(path: &Path, log: &[EpisodeRecord]) -> Result<(), TrainError> {
    let mut w = csv::Writer::from_path(path)?;
    if log.is_empty() {
        w.write_record([
            "episode",
            "steps",
            "return",
            "final_rho",
            "reached",
            "steps_to_reach",
            "violated",
            "truncated",
            "diverged",
        ])?;
    }
    for r in log {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_log(path: &Path) -> Result<Vec<EpisodeRecord>, TrainError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// Snapshot passed to the progress hook.
#[derive(Debug, Clone, Copy)]
pub struct Progress<'a> {
    pub samples: usize,
    pub updates: u64,
    pub episodes: usize,
    pub agent: &'a Agent,
}

pub struct TrainOutcome {
    pub agent: Agent,
    pub log: Vec<EpisodeRecord>,
    /// Replay buffer at the end of training.
    pub buffer: ReplayBuffer,
    pub samples: usize,
    pub updates: u64,
}

const FINITE_CHECK_EVERY: u64 = 10_000;
/// Consecutive empty episodes (initial state already unsafe) tolerated
/// before the initial box is deemed to lie inside the unsafe set.
const MAX_EMPTY_EPISODES: usize = 10_000;

/// Trains on the reach task; any unsafe set in `cfg.env` is ignored.
pub fn train_asap_phi(cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    let mut reach = cfg.clone();
    reach.env.unsafe_set = None;
    train_with(&reach, |_| {})
}

/// Trains on the reach-avoid task; episodes end on entering the unsafe set.
pub fn train_recovery(cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    if cfg.env.unsafe_set.is_none() {
        return Err(TrainError::Config("recovery training needs an unsafe set".into()));
    }
    train_with(cfg, |_| {})
}

/// Dispatches on whether the environment declares an unsafe set.
pub fn train(cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    train_with(cfg, |_| {})
}

/// [`train`] with a hook called every `eval_every` samples and once at the end.
pub fn train_with<F>(cfg: &TrainConfig, mut hook: F) -> Result<TrainOutcome, TrainError>
where
    F: FnMut(Progress<'_>),
{
    cfg.validate()?;
    let tp = &cfg.trainer;
    let spec = &cfg.env;
    let phi = spec.phi_target()?;
    let mut env = Env::new(spec.clone(), tp.seed)?;
    let mut len_rng = stream(tp.seed, Stream::Env);
    let mut init_rng = stream(tp.seed, Stream::Init);
    let mut agent_rng = stream(tp.seed, Stream::Agent);
    let mut weight_rng = stream(tp.seed, Stream::Weights);
    let mut agent_cfg = cfg.agent.clone();
    agent_cfg.reward_scale *= cfg.reward.learning_scale();
    let mut agent = Agent::new(
        agent_cfg,
        spec.state_dim(),
        spec.action_low.clone(),
        spec.action_high.clone(),
        &mut weight_rng,
    )?;
    let mut buffer = ReplayBuffer::new(cfg.agent.buffer_capacity, spec.state_dim(), spec.action_dim())?;
    let mut batch = Batch::default();
    let batch_size = cfg.agent.batch_size();
    let mut log = Vec::new();
    let mut samples = 0usize;
    let mut updates = 0u64;
    let mut next_hook = tp.eval_every;
    let mut last_hook = usize::MAX;
    let mut empty_run = 0usize;
    let mut action = vec![0.0; spec.action_dim()];

    let mut do_update = |agent: &mut Agent,
                         buffer: &ReplayBuffer,
                         rng: &mut rand_chacha::ChaCha8Rng,
                         updates: &mut u64|
     -> Result<(), TrainError> {
        if buffer.len() < batch_size {
            return Ok(());
        }
        buffer.sample(batch_size, rng, &mut batch)?;
        agent.update(&batch, rng)?;
        *updates += 1;
        if updates.is_multiple_of(FINITE_CHECK_EVERY) && !agent.params_finite() {
            return Err(RlError::NonFinite(format!("network parameters after {updates} updates")).into());
        }
        Ok(())
    };

    while samples < tp.m {
        let k = len_rng.random_range(tp.k_min..=tp.k_max);
        let s0 = sample_initial(spec, &mut init_rng);
        env.reset(&s0)?;
        let mut trace = Trace::empty(spec.state_dim())?;
        trace.push(&s0)?;
        let budget = k.min(tp.m - samples);
        let mut rec = EpisodeRecord {
            episode: log.len(),
            steps: 0,
            ret: 0.0,
            final_rho: 0.0,
            reached: false,
            steps_to_reach: None,
            violated: false,
            truncated: budget < k,
            diverged: false,
        };
        if in_ball(&s0, &spec.target)? {
            rec.reached = true;
            rec.steps_to_reach = Some(0);
        }
        let mut pending_updates = 0usize;
        let starts_unsafe = match &spec.unsafe_set {
            Some(u) => in_ball(&s0, u)?,
            None => false,
        };
        rec.violated = starts_unsafe;
        if !starts_unsafe {
            for t in 0..budget {
                let pre_reward = match tp.reward_timing {
                    RewardTiming::Pre => Some(step_reward(cfg, &trace, t, &phi, false)?),
                    RewardTiming::Post => None,
                };
                let s = trace.state(t).to_vec();
                let unit = if samples < cfg.agent.warmup {
                    agent.random_unit_action(&mut agent_rng)
                } else {
                    agent.select_unit_action(&s, true, &mut agent_rng)?
                };
                spec.scale_action(&unit, &mut action);
                samples += 1;
                let s_next = match env.step(&action) {
                    Ok(x) => x.to_vec(),
                    Err(EnvError::Diverged { .. }) => {
                        rec.diverged = true;
                        break;
                    }
                    Err(e) => return Err(e.into()),
                };
                trace.push(&s_next)?;
                let entered_unsafe = match &spec.unsafe_set {
                    Some(u) => in_ball(&s_next, u)?,
                    None => false,
                };
                let last = t + 1 == budget;
                // Entering the unsafe set ends the episode and scores the
                // post-state, so r_sat is never paid on a violating transition.
                // The sparse reward of a final step sees the whole episode.
                let sparse_end = last && cfg.reward.mode == RewardMode::SparseRho;
                let r = match pre_reward {
                    _ if entered_unsafe => step_reward(cfg, &trace, t + 1, &phi, true)?,
                    Some(_) if sparse_end => step_reward(cfg, &trace, t, &phi, true)?,
                    Some(r) => r,
                    None => step_reward(cfg, &trace, t + 1, &phi, last)?,
                };
                buffer.push_parts(&s, &unit, r, &s_next, entered_unsafe)?;
                rec.steps += 1;
                rec.ret += r;
                if rec.steps_to_reach.is_none() && in_ball(&s_next, &spec.target)? {
                    rec.reached = true;
                    rec.steps_to_reach = Some(t + 1);
                }
                if samples > cfg.agent.warmup {
                    match cfg.agent.update_mode {
                        UpdateMode::PerStep => do_update(&mut agent, &buffer, &mut agent_rng, &mut updates)?,
                        UpdateMode::EndOfEpisode => pending_updates += 1,
                    }
                }
                if next_hook == Some(samples) {
                    hook(Progress {
                        samples,
                        updates,
                        episodes: log.len(),
                        agent: &agent,
                    });
                    next_hook = tp.eval_every.map(|e| samples + e);
                    last_hook = samples;
                }
                if entered_unsafe {
                    rec.violated = true;
                    break;
                }
            }
        }
        if rec.steps == 0 && !rec.diverged {
            empty_run += 1;
            if empty_run >= MAX_EMPTY_EPISODES {
                return Err(TrainError::Config(format!(
                    "{empty_run} consecutive initial states fell inside the unsafe set"
                )));
            }
        } else {
            empty_run = 0;
        }
        for _ in 0..pending_updates {
            do_update(&mut agent, &buffer, &mut agent_rng, &mut updates)?;
        }
        let last_state = trace.state(trace.len() - 1);
        rec.final_rho = -dist_to_ball(last_state, &spec.target)?;
        log.push(rec);
    }
    if last_hook != samples {
        hook(Progress {
            samples,
            updates,
            episodes: log.len(),
            agent: &agent,
        });
    }
    Ok(TrainOutcome {
        agent,
        log,
        buffer,
        samples,
        updates,
    })
}

fn step_reward(cfg: &TrainConfig, trace: &Trace, t: usize, phi: &Formula, end: bool) -> Result<f64, TrainError> {
    Ok(cfg
        .reward
        .step_reward(trace, t, phi, end, &cfg.env.target, cfg.env.unsafe_set.as_ref())?)
}

/// Trace of a policy rollout with reach and violation annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub trace: Trace,
    /// First `t` with `s_t` in the target.
    pub reached_at: Option<usize>,
    /// First `t` with `s_t` in the unsafe set; the trace ends there.
    pub violated_at: Option<usize>,
    /// The simulator produced a non-finite state after the last trace entry.
    pub diverged: bool,
}

/// Runs `policy` from `s0` for up to `max_len` steps without learning. When
/// `avoid` is set, the rollout stops at the first state inside the unsafe set.
pub fn episode_rollout<P: Policy + ?Sized>(
    policy: &P,
    env: &mut Env,
    s0: &[f64],
    max_len: usize,
    avoid: bool,
) -> Result<Rollout, TrainError> {
    env.reset_forced(s0)?;
    let spec = env.spec().clone();
    let unsafe_set = if avoid { spec.unsafe_set.as_ref() } else { None };
    let mut trace = Trace::empty(spec.state_dim())?;
    trace.push(s0)?;
    let mut out = Rollout {
        trace: Trace::empty(spec.state_dim())?,
        reached_at: None,
        violated_at: None,
        diverged: false,
    };
    let mut t = 0;
    loop {
        let s = trace.state(t);
        if out.reached_at.is_none() && in_ball(s, &spec.target)? {
            out.reached_at = Some(t);
        }
        if let Some(u) = unsafe_set {
            if in_ball(s, u)? {
                out.violated_at = Some(t);
                break;
            }
        }
        if t == max_len {
            break;
        }
        let a = policy.action(s)?;
        match env.step(&a) {
            Ok(x) => {
                let x = x.to_vec();
                trace.push(&x)?;
            }
            Err(EnvError::Diverged { .. }) => {
                out.diverged = true;
                break;
            }
            Err(e) => return Err(e.into()),
        }
        t += 1;
    }
    out.trace = trace;
    Ok(out)
}
