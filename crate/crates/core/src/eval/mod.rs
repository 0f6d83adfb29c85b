//! Success-rate evaluation of trained policies and an exact tabular oracle.
//!
//! [`evaluate`] rolls a deterministic policy out from uniformly drawn initial
//! states once, up to the largest requested tolerance, and scores every
//! tolerance on the same rollouts, so success rates are non-decreasing in the
//! tolerance.

pub mod tabular;

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{sample_initial, Env, EnvError, EnvSpec, Task};
use crate::reward::RewardError;
use crate::rl::{Agent, Policy};
use crate::rng::{stream, Stream};
use crate::stl::StlError;
use crate::trainer::{episode_rollout, Rollout, TrainError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid MDP: {0}")]
    Mdp(String),
    #[error("trace space of {traces:e} exceeds the enumeration limit {limit}")]
    TooLarge { traces: f64, limit: usize },
    #[error("checkpoint does not match the environment: {0}")]
    Mismatch(String),
    #[error("invalid evaluation config: {0}")]
    Config(String),
    #[error(transparent)]
    Stl(#[from] StlError),
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error("evaluation output: {0}")]
    Io(#[from] std::io::Error),
    #[error("evaluation output: {0}")]
    Csv(#[from] csv::Error),
    #[error("evaluation output: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DumpMode {
    #[default]
    None,
    /// Traces of failed episodes at the largest tolerance.
    Failures,
    All,
}

fn default_points() -> usize {
    1000
}

fn default_tolerances() -> Vec<usize> {
    vec![15, 25, 30]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    #[serde(default = "default_points")]
    pub n_points: usize,
    /// Maximum time tolerances in steps.
    #[serde(default = "default_tolerances")]
    pub tolerances: Vec<usize>,
    /// Reach ignores any unsafe set; reach-avoid stops at the first violation.
    /// Defaults to the environment's task.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub dump: DumpMode,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            n_points: default_points(),
            tolerances: default_tolerances(),
            task: None,
            seed: 0,
            dump: DumpMode::None,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.n_points == 0 {
            return Err(EvalError::Config("n_points must be positive".into()));
        }
        if self.tolerances.is_empty() {
            return Err(EvalError::Config("at least one tolerance is needed".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Timeout,
    Violation,
    Diverged,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::Timeout => "timeout",
            Outcome::Violation => "violation",
            Outcome::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeEval {
    pub index: usize,
    pub outcome: Outcome,
    pub steps_to_reach: Option<usize>,
    pub violation_step: Option<usize>,
    pub s0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub task: Task,
    pub tolerance: usize,
    pub n_points: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_steps: Option<f64>,
    pub median_steps: Option<f64>,
    pub violations: usize,
    pub violation_rate: f64,
    pub timeouts: usize,
    pub diverged: usize,
    #[serde(skip)]
    pub records: Vec<EpisodeEval>,
}

/// Rollouts shared by all tolerances of one evaluation.
#[derive(Debug, Clone)]
pub struct EvalRun {
    pub task: Task,
    pub initial_states: Vec<Vec<f64>>,
    pub rollouts: Vec<Rollout>,
    pub reports: Vec<EvalReport>,
}

fn classify(r: &Rollout, tolerance: usize) -> Outcome {
    if r.reached_at.is_some_and(|t| t <= tolerance) {
        return Outcome::Success;
    }
    if r.violated_at.is_some_and(|t| t <= tolerance) {
        return Outcome::Violation;
    }
    // The state after the last trace entry was non-finite.
    if r.diverged && r.trace.len() <= tolerance {
        return Outcome::Diverged;
    }
    Outcome::Timeout
}

fn report(task: Task, tolerance: usize, states: &[Vec<f64>], rollouts: &[Rollout]) -> EvalReport {
    let records: Vec<EpisodeEval> = rollouts
        .iter()
        .zip(states)
        .enumerate()
        .map(|(index, (r, s0))| {
            let outcome = classify(r, tolerance);
            EpisodeEval {
                index,
                outcome,
                steps_to_reach: r.reached_at.filter(|_| outcome == Outcome::Success),
                violation_step: r.violated_at.filter(|_| outcome == Outcome::Violation),
                s0: s0.clone(),
            }
        })
        .collect();
    let count = |o: Outcome| records.iter().filter(|e| e.outcome == o).count();
    let n = records.len();
    let mut steps: Vec<usize> = records.iter().filter_map(|e| e.steps_to_reach).collect();
    steps.sort_unstable();
    let mean_steps = (!steps.is_empty()).then(|| steps.iter().sum::<usize>() as f64 / steps.len() as f64);
    let median_steps = (!steps.is_empty()).then(|| {
        let k = steps.len();
        if k % 2 == 1 {
            steps[k / 2] as f64
        } else {
            0.5 * (steps[k / 2 - 1] + steps[k / 2]) as f64
        }
    });
    let successes = count(Outcome::Success);
    let violations = count(Outcome::Violation);
    EvalReport {
        task,
        tolerance,
        n_points: n,
        successes,
        success_rate: successes as f64 / n as f64,
        mean_steps,
        median_steps,
        violations,
        violation_rate: violations as f64 / n as f64,
        timeouts: count(Outcome::Timeout),
        diverged: count(Outcome::Diverged),
        records,
    }
}

/// Rejects a checkpoint whose dimensions or action box differ from `spec`.
pub fn check_agent(agent: &Agent, spec: &EnvSpec) -> Result<(), EvalError> {
    if agent.state_dim() != spec.state_dim() || agent.action_dim() != spec.action_dim() {
        return Err(EvalError::Mismatch(format!(
            "agent maps {} states to {} actions, {} has {} and {}",
            agent.state_dim(),
            agent.action_dim(),
            spec.name,
            spec.state_dim(),
            spec.action_dim()
        )));
    }
    let lo = agent.scale_action(&vec![-1.0; spec.action_dim()]);
    let hi = agent.scale_action(&vec![1.0; spec.action_dim()]);
    if lo != spec.action_low || hi != spec.action_high {
        return Err(EvalError::Mismatch("action bounds differ".into()));
    }
    Ok(())
}

/// Evaluates `policy` from `cfg.n_points` initial states drawn from the
/// evaluation stream of `cfg.seed`. Episodes run on the current rayon pool;
/// results do not depend on its size.
pub fn evaluate<P: Policy + Sync + ?Sized>(policy: &P, spec: &EnvSpec, cfg: &EvalConfig) -> Result<EvalRun, EvalError> {
    cfg.validate()?;
    spec.validate()?;
    let task = cfg.task.unwrap_or(spec.task());
    if task == Task::ReachAvoid && spec.unsafe_set.is_none() {
        return Err(EvalError::Config("reach_avoid evaluation needs an unsafe set".into()));
    }
    let mut rng = stream(cfg.seed, Stream::Eval);
    let initial_states: Vec<Vec<f64>> = (0..cfg.n_points).map(|_| sample_initial(spec, &mut rng)).collect();
    let horizon = *cfg.tolerances.iter().max().expect("validated non-empty");
    let avoid = task == Task::ReachAvoid;
    let rollouts = initial_states
        .par_iter()
        .map_init(
            || Env::new(spec.clone(), 0),
            |env, s0| -> Result<Rollout, EvalError> {
                let env = env.as_mut().map_err(|e| EvalError::Env(e.clone()))?;
                Ok(episode_rollout(policy, env, s0, horizon, avoid)?)
            },
        )
        .collect::<Result<Vec<_>, _>>()?;
    let reports = cfg
        .tolerances
        .iter()
        .map(|&tol| report(task, tol, &initial_states, &rollouts))
        .collect();
    Ok(EvalRun {
        task,
        initial_states,
        rollouts,
        reports,
    })
}

/// Writes `report_tol{T}.csv` and `summary_tol{T}.json` per tolerance and,
/// depending on `dump`, per-episode traces under `traces/`.
pub fn write_outputs(dir: &Path, run: &EvalRun, dump: DumpMode) -> Result<(), EvalError> {
    fs::create_dir_all(dir)?;
    for rep in &run.reports {
        let mut w = csv::Writer::from_path(dir.join(format!("report_tol{}.csv", rep.tolerance)))?;
        let dim = run.initial_states.first().map_or(0, Vec::len);
        let mut header = vec![
            "index".to_string(),
            "outcome".into(),
            "steps_to_reach".into(),
            "violation_step".into(),
        ];
        header.extend((0..dim).map(|i| format!("s0_x{i}")));
        w.write_record(&header)?;
        for e in &rep.records {
            let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
            let mut row = vec![
                e.index.to_string(),
                e.outcome.name().to_string(),
                opt(e.steps_to_reach),
                opt(e.violation_step),
            ];
            row.extend(e.s0.iter().map(|x| format!("{x:?}")));
            w.write_record(&row)?;
        }
        w.flush()?;
        let json = serde_json::to_string_pretty(rep)?;
        fs::write(dir.join(format!("summary_tol{}.json", rep.tolerance)), json + "\n")?;
    }
    if dump != DumpMode::None {
        let tdir = dir.join("traces");
        fs::create_dir_all(&tdir)?;
        let last = run
            .reports
            .iter()
            .max_by_key(|r| r.tolerance)
            .expect("at least one report");
        for (e, r) in last.records.iter().zip(&run.rollouts) {
            if dump == DumpMode::Failures && e.outcome == Outcome::Success {
                continue;
            }
            let mut f = fs::File::create(tdir.join(format!("ep{:05}_{}.csv", e.index, e.outcome.name())))?;
            r.trace.write_csv(&mut f)?;
        }
    }
    Ok(())
}
