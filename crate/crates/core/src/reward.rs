//! Per-step rewards computed from a growing trace.
//!
//! The ASAP reward pays the formula's robustness until the formula is
//! satisfied and a large constant `r_sat` afterwards. Choosing `r_sat` above
//! [`choose_r_sat`]'s bound makes every optimal policy prefer traces that
//! satisfy the formula earlier. The robustness-based and distance-based
//! rewards are kept as baselines.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{dist_to_ball, Ball, EnvError};
use crate::stl::semantics::{robustness_in, sat_in, Window};
use crate::stl::{Formula, StlError, Trace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RewardError {
    #[error("rho bounds must satisfy rho_min < rho_max (got {rho_min} and {rho_max})")]
    InvalidBounds { rho_min: f64, rho_max: f64 },
    #[error("r_sat = {r_sat} does not exceed the ordering bound {bound}")]
    RSatTooSmall { r_sat: f64, bound: f64 },
    #[error("invalid reward spec: {0}")]
    Invalid(String),
    #[error(transparent)]
    Stl(#[from] StlError),
    #[error(transparent)]
    Env(#[from] EnvError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    Asap,
    /// Robustness of the whole episode, paid once at its end.
    SparseRho,
    /// Robustness of the prefix `s_0 .. s_t`.
    DenseRho,
    /// Robustness of the last [`RewardSpec::window`] states.
    FiniteDenseRho,
    /// Negative distance to the target plus distance to the unsafe set.
    Distance,
}

impl RewardMode {
    pub fn name(&self) -> &'static str {
        match self {
            RewardMode::Asap => "asap",
            RewardMode::SparseRho => "sparse_rho",
            RewardMode::DenseRho => "dense_rho",
            RewardMode::FiniteDenseRho => "finite_dense_rho",
            RewardMode::Distance => "distance",
        }
    }
}

/// Reward configuration; the formula itself is supplied separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardSpec {
    pub mode: RewardMode,
    pub r_sat: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub k_max: usize,
    /// Window length of the finite-dense variant.
    #[serde(default = "unit_window")]
    pub window: usize,
    #[serde(default = "unit")]
    pub lambda_t: f64,
    #[serde(default)]
    pub lambda_o: f64,
    #[serde(default)]
    pub r_base: f64,
    /// Divide rewards by [`RewardSpec::magnitude`] before learning.
    #[serde(default = "yes")]
    pub normalize: bool,
}

fn yes() -> bool {
    true
}

fn unit() -> f64 {
    1.0
}

fn unit_window() -> usize {
    1
}

impl RewardSpec {
    /// ASAP reward with `r_sat` from [`choose_r_sat`] with margin 1.
    pub fn asap(rho_min: f64, rho_max: f64, k_max: usize) -> Result<Self, RewardError> {
        Ok(Self {
            mode: RewardMode::Asap,
            r_sat: choose_r_sat(rho_min, rho_max, k_max, 1.0)?,
            rho_min,
            rho_max,
            k_max,
            window: 1,
            lambda_t: 1.0,
            lambda_o: 0.0,
            r_base: 0.0,
            normalize: true,
        })
    }

    /// Same bounds with a different reward mode.
    pub fn with_mode(&self, mode: RewardMode) -> Self {
        Self { mode, ..self.clone() }
    }

    /// Bound on the reward magnitude used for normalization: `r_sat` (or the
    /// robustness bound) for ASAP, the robustness bound for the robustness
    /// rewards, and the robustness range times the weights for distance.
    pub fn magnitude(&self) -> f64 {
        let rho = self.rho_min.abs().max(self.rho_max.abs());
        let m = match self.mode {
            RewardMode::Asap => self.r_sat.abs().max(rho),
            RewardMode::SparseRho | RewardMode::DenseRho | RewardMode::FiniteDenseRho => rho,
            RewardMode::Distance => (self.lambda_t + self.lambda_o) * (self.rho_max - self.rho_min) + self.r_base.abs(),
        };
        if m > 0.0 && m.is_finite() {
            m
        } else {
            1.0
        }
    }

    /// Factor applied to rewards before they reach the learner.
    pub fn learning_scale(&self) -> f64 {
        if self.normalize {
            1.0 / self.magnitude()
        } else {
            1.0
        }
    }

    pub fn validate(&self) -> Result<(), RewardError> {
        if !(self.rho_min < self.rho_max) || !self.rho_min.is_finite() || !self.rho_max.is_finite() {
            return Err(RewardError::InvalidBounds {
                rho_min: self.rho_min,
                rho_max: self.rho_max,
            });
        }
        if self.k_max == 0 {
            return Err(RewardError::Invalid("k_max must be positive".into()));
        }
        if !(self.lambda_t >= 0.0 && self.lambda_o >= 0.0) || !self.r_base.is_finite() {
            return Err(RewardError::Invalid(
                "lambda_t and lambda_o must be nonnegative and r_base finite".into(),
            ));
        }
        if self.window == 0 {
            return Err(RewardError::Invalid("finite_dense_rho window must be positive".into()));
        }
        if self.mode == RewardMode::Asap {
            let bound = ordering_bound(self.rho_min, self.rho_max, self.k_max);
            if !(self.r_sat > bound) || !self.r_sat.is_finite() {
                return Err(RewardError::RSatTooSmall {
                    r_sat: self.r_sat,
                    bound,
                });
            }
        }
        Ok(())
    }

    /// Reward of step `t` on trace `tr`. `episode_end` marks the last step;
    /// `target`/`unsafe_set` are only used by the distance reward, which
    /// scores the state `tr[t]`.
    pub fn step_reward(
        &self,
        tr: &Trace,
        t: usize,
        phi: &Formula,
        episode_end: bool,
        target: &Ball,
        unsafe_set: Option<&Ball>,
    ) -> Result<f64, RewardError> {
        Ok(match self.mode {
            RewardMode::Asap => reward_asap(tr, t, phi, self.r_sat)?,
            RewardMode::SparseRho => reward_sparse_rho(tr, t, phi, episode_end)?,
            RewardMode::DenseRho => reward_dense_rho(tr, t, phi)?,
            RewardMode::FiniteDenseRho => reward_finite_dense_rho(tr, t, phi, self.window)?,
            RewardMode::Distance => {
                check_time(tr, t)?;
                reward_distance(
                    tr.state(t),
                    target,
                    unsafe_set,
                    self.lambda_t,
                    self.lambda_o,
                    self.r_base,
                )?
            }
        })
    }
}

fn ordering_bound(rho_min: f64, rho_max: f64, k_max: usize) -> f64 {
    rho_max + (rho_max - rho_min) * k_max as f64
}

/// `rho_max + (rho_max - rho_min) * k_max + margin`.
pub fn choose_r_sat(rho_min: f64, rho_max: f64, k_max: usize, margin: f64) -> Result<f64, RewardError> {
    if !(rho_min < rho_max) || !rho_min.is_finite() || !rho_max.is_finite() {
        return Err(RewardError::InvalidBounds { rho_min, rho_max });
    }
    if !(margin > 0.0) || k_max == 0 {
        return Err(RewardError::Invalid("margin and k_max must be positive".into()));
    }
    Ok(ordering_bound(rho_min, rho_max, k_max) + margin)
}

fn check_time(tr: &Trace, t: usize) -> Result<(), StlError> {
    if t >= tr.len() {
        return Err(StlError::TimeOutOfRange { t, len: tr.len() });
    }
    Ok(())
}

/// `r_sat` when `phi` holds at `t`, otherwise its robustness there.
pub fn reward_asap(tr: &Trace, t: usize, phi: &Formula, r_sat: f64) -> Result<f64, StlError> {
    let w = Window::full(tr);
    if sat_in(w, t, phi)? {
        Ok(r_sat)
    } else {
        robustness_in(w, t, phi)
    }
}

/// Zero until the episode ends, then the robustness of the whole trace.
pub fn reward_sparse_rho(tr: &Trace, t: usize, phi: &Formula, episode_end: bool) -> Result<f64, StlError> {
    check_time(tr, t)?;
    if episode_end {
        robustness_in(Window::full(tr), 0, phi)
    } else {
        Ok(0.0)
    }
}

/// Robustness at time 0 of the prefix `tr[0..=t]`.
pub fn reward_dense_rho(tr: &Trace, t: usize, phi: &Formula) -> Result<f64, StlError> {
    robustness_in(Window::new(tr, 0, t)?, 0, phi)
}

/// Robustness at the start of the window `tr[t+1-d ..= t]` (clamped at 0).
pub fn reward_finite_dense_rho(tr: &Trace, t: usize, phi: &Formula, d: usize) -> Result<f64, StlError> {
    let d = d.max(1);
    let start = (t + 1).saturating_sub(d);
    robustness_in(Window::new(tr, start, t)?, 0, phi)
}

/// `-lambda_t * d_T + lambda_o * d_O + r_base` with `d = max(0, ||s - c|| - r)`.
pub fn reward_distance(
    s: &[f64],
    target: &Ball,
    unsafe_set: Option<&Ball>,
    lambda_t: f64,
    lambda_o: f64,
    r_base: f64,
) -> Result<f64, EnvError> {
    let d_t = dist_to_ball(s, target)?.max(0.0);
    let d_o = match unsafe_set {
        Some(u) => dist_to_ball(s, u)?.max(0.0),
        None => 0.0,
    };
    Ok(-lambda_t * d_t + lambda_o * d_o + r_base)
}
