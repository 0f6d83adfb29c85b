//! Declarative run configuration.
//!
//! A run file is TOML (or JSON) with the sections `[env]`, `[agent]`,
//! `[reward]`, `[trainer]` and `[eval]`. The environment section starts from
//! a benchmark preset and overrides individual fields; reward bounds left
//! unset are derived from the environment. Unknown keys are rejected with
//! their full path.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::env::{Ball, Benchmark, BicycleParams, DcMotorParams, EnvError, EnvSpec, Integrator, Task};
use crate::eval::{EvalConfig, EvalError};
use crate::reward::{choose_r_sat, RewardError, RewardMode, RewardSpec};
use crate::rl::{AgentConfig, Algo, RlError};
use crate::trainer::{TrainConfig, TrainError, TrainerParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Syntax(String),
    #[error("at `{path}`: {message}")]
    Key { path: String, message: String },
    #[error("bad override `{0}` (expected key.path=value)")]
    Override(String),
    #[error("[env]: {0}")]
    Env(#[from] EnvError),
    #[error("[agent]: {0}")]
    Agent(#[from] RlError),
    #[error("[reward]: {0}")]
    Reward(#[from] RewardError),
    #[error("[eval]: {0}")]
    Eval(#[from] EvalError),
    #[error("{0}")]
    Train(#[from] TrainError),
}

/// Environment section: a preset plus field overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSection {
    pub name: Benchmark,
    #[serde(default = "reach")]
    pub task: Task,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub substeps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<Integrator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_low: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_high: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_low: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_high: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Ball>,
    #[serde(default, rename = "unsafe", skip_serializing_if = "Option::is_none")]
    pub unsafe_set: Option<Ball>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dc_motor: Option<DcMotorParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bicycle: Option<BicycleParams>,
}

fn reach() -> Task {
    Task::Reach
}

impl EnvSection {
    pub fn new(name: Benchmark, task: Task) -> Self {
        Self {
            name,
            task,
            dt: None,
            substeps: None,
            integrator: None,
            action_low: None,
            action_high: None,
            init_low: None,
            init_high: None,
            target: None,
            unsafe_set: None,
            dc_motor: None,
            bicycle: None,
        }
    }

    pub fn resolve(&self) -> Result<EnvSpec, EnvError> {
        // Presets refuse Reach&Avoid where the default balls overlap; an
        // explicit unsafe ball makes the task well defined again.
        let base_task = if self.unsafe_set.is_some() {
            Task::Reach
        } else {
            self.task
        };
        let mut spec = EnvSpec::preset(self.name, base_task)?;
        let set = |dst: &mut Vec<f64>, src: &Option<Vec<f64>>| {
            if let Some(v) = src {
                dst.clone_from(v);
            }
        };
        if let Some(dt) = self.dt {
            spec.dt = dt;
        }
        if let Some(n) = self.substeps {
            spec.substeps = n;
        }
        if let Some(i) = self.integrator {
            spec.integrator = i;
        }
        set(&mut spec.action_low, &self.action_low);
        set(&mut spec.action_high, &self.action_high);
        set(&mut spec.init_low, &self.init_low);
        set(&mut spec.init_high, &self.init_high);
        if let Some(t) = &self.target {
            spec.target = t.clone();
        }
        spec.unsafe_set = match self.task {
            Task::Reach => None,
            Task::ReachAvoid => self.unsafe_set.clone().or(spec.unsafe_set),
        };
        if let Some(p) = &self.dc_motor {
            spec.dc_motor = *p;
        }
        if let Some(p) = &self.bicycle {
            spec.bicycle = *p;
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn asap_mode() -> RewardMode {
    RewardMode::Asap
}
fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn yes() -> bool {
    true
}

/// Reward section; bounds and `r_sat` default to values derived from the
/// environment and the trainer's `k_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardSection {
    #[serde(default = "asap_mode")]
    pub mode: RewardMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_sat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    /// Added to the ordering bound when `r_sat` is derived.
    #[serde(default = "one")]
    pub margin: f64,
    #[serde(default = "one_usize")]
    pub window: usize,
    #[serde(default = "one")]
    pub lambda_t: f64,
    #[serde(default)]
    pub lambda_o: f64,
    #[serde(default)]
    pub r_base: f64,
    #[serde(default = "yes")]
    pub normalize: bool,
}

impl Default for RewardSection {
    fn default() -> Self {
        Self {
            mode: RewardMode::Asap,
            r_sat: None,
            rho_min: None,
            rho_max: None,
            k_max: None,
            margin: 1.0,
            window: 1,
            lambda_t: 1.0,
            lambda_o: 0.0,
            r_base: 0.0,
            normalize: true,
        }
    }
}

impl RewardSection {
    pub fn resolve(&self, env: &EnvSpec, trainer_k_max: usize) -> Result<RewardSpec, RewardError> {
        let (lo, hi) = env.rho_bounds();
        let rho_min = self.rho_min.unwrap_or(lo);
        let rho_max = self.rho_max.unwrap_or(hi);
        let k_max = self.k_max.unwrap_or(trainer_k_max);
        let r_sat = match self.r_sat {
            Some(r) => r,
            None => choose_r_sat(rho_min, rho_max, k_max, self.margin)?,
        };
        let spec = RewardSpec {
            mode: self.mode,
            r_sat,
            rho_min,
            rho_max,
            k_max,
            window: self.window,
            lambda_t: self.lambda_t,
            lambda_o: self.lambda_o,
            r_base: self.r_base,
            normalize: self.normalize,
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn default_agent() -> AgentConfig {
    AgentConfig::new(Algo::Sac)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Output directory; relative paths resolve against the working directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub env: EnvSection,
    #[serde(default = "default_agent")]
    pub agent: AgentConfig,
    #[serde(default)]
    pub reward: RewardSection,
    #[serde(default)]
    pub trainer: TrainerParams,
    #[serde(default)]
    pub eval: EvalConfig,
}

/// Fully resolved configuration of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

impl RunConfig {
    /// Desk-scale defaults for a benchmark: SAC with (64, 64) hidden layers.
    pub fn preset(name: Benchmark, task: Task) -> Self {
        let mut agent = AgentConfig::new(Algo::Sac);
        agent.hidden = Some(vec![64, 64]);
        let m = match name {
            Benchmark::DcMotor => 1_000_000,
            Benchmark::Bicycle | Benchmark::Attitude => 3_000_000,
        };
        Self {
            out: None,
            env: EnvSection::new(name, task),
            agent,
            reward: RewardSection::default(),
            trainer: TrainerParams {
                m,
                ..TrainerParams::default()
            },
            eval: EvalConfig::default(),
        }
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        Self::from_path_with(path, &[])
    }

    /// Loads a file and applies `key.path=value` overrides before validation.
    pub fn from_path_with(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let json = path.extension().is_some_and(|e| e == "json");
        Self::from_text(&text, json, overrides)
    }

    pub fn from_text(text: &str, json: bool, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut tree: Value = if json {
            serde_json::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?
        } else {
            let table: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
            serde_json::to_value(table).map_err(|e| ConfigError::Syntax(e.to_string()))?
        };
        if let Value::Object(map) = &mut tree {
            // Lets `agent.*` overrides work on files without an [agent] table.
            map.entry("agent")
                .or_insert_with(|| serde_json::json!({ "algo": "sac" }));
        }
        for o in overrides {
            apply_override(&mut tree, o)?;
        }
        Self::from_value(tree)
    }

    /// Re-applies overrides to an existing configuration.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut tree = serde_json::to_value(self).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        for o in overrides {
            apply_override(&mut tree, o)?;
        }
        Self::from_value(tree)
    }

    fn from_value(mut tree: Value) -> Result<Self, ConfigError> {
        integral_floats_to_ints(&mut tree);
        let cfg: RunConfig = serde_path_to_error::deserialize(tree).map_err(|e| ConfigError::Key {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        cfg.resolve()?;
        Ok(cfg)
    }

    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let env = self.env.resolve()?;
        self.agent.validate()?;
        let reward = self.reward.resolve(&env, self.trainer.k_max)?;
        self.eval.validate()?;
        if self.eval.task == Some(Task::ReachAvoid) && env.unsafe_set.is_none() {
            return Err(ConfigError::Key {
                path: "eval.task".into(),
                message: "reach_avoid evaluation needs env.task = \"reach_avoid\"".into(),
            });
        }
        let train = TrainConfig {
            env,
            agent: self.agent.clone(),
            reward,
            trainer: self.trainer.clone(),
        };
        train.validate()?;
        Ok(Resolved {
            train,
            eval: self.eval.clone(),
        })
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        toml::to_string_pretty(self).map_err(|e| ConfigError::Syntax(e.to_string()))
    }

    /// SHA-256 of the resolved configuration, ignoring the output directory.
    pub fn hash(&self) -> Result<String, ConfigError> {
        let resolved = self.resolve()?;
        let text = serde_json::to_string(&resolved).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        Ok(hex::encode(Sha256::digest(text.as_bytes())))
    }
}

/// Reads any deserializable table from a TOML file, or JSON when the
/// extension is `.json`, reporting unknown or mistyped keys by path.
pub fn read_structured<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut tree: Value = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| ConfigError::Syntax(e.to_string()))?
    } else {
        let table: toml::Table = toml::from_str(&text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        serde_json::to_value(table).map_err(|e| ConfigError::Syntax(e.to_string()))?
    };
    integral_floats_to_ints(&mut tree);
    serde_path_to_error::deserialize(tree).map_err(|e| ConfigError::Key {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

/// JSON numbers such as `1e6` arrive as floats; integral ones become
/// integers so they can fill integer fields. Float fields accept both.
fn integral_floats_to_ints(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if let Some(f) = n.as_f64().filter(|_| !n.is_i64() && !n.is_u64()) {
                if f.fract() == 0.0 && f.abs() < 9.0e15 {
                    *v = if f >= 0.0 {
                        Value::from(f as u64)
                    } else {
                        Value::from(f as i64)
                    };
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(integral_floats_to_ints),
        Value::Object(map) => map.values_mut().for_each(integral_floats_to_ints),
        _ => {}
    }
}

/// Parses the right-hand side of an override as a TOML value, falling back
/// to a bare string.
fn parse_override_value(text: &str) -> Value {
    let wrapped = format!("v = {text}");
    match toml::from_str::<toml::Table>(&wrapped) {
        Ok(mut t) => t
            .remove("v")
            .and_then(|v| serde_json::to_value(v).ok())
            .unwrap_or_else(|| Value::String(text.to_string())),
        Err(_) => Value::String(text.to_string()),
    }
}

pub fn apply_override(tree: &mut Value, spec: &str) -> Result<(), ConfigError> {
    let (key, value) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::Override(spec.to_string()))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::Override(spec.to_string()));
    }
    let mut node = tree;
    for p in &parts[..parts.len() - 1] {
        if !node.is_object() {
            return Err(ConfigError::Override(spec.to_string()));
        }
        node = node
            .as_object_mut()
            .expect("checked object")
            .entry(p.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| ConfigError::Override(spec.to_string()))?;
    obj.insert(parts[parts.len() - 1].to_string(), parse_override_value(value.trim()));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[env]\nname = \"dc_motor\"\n";

    #[test]
    fn minimal_config_resolves_defaults() {
        let cfg = RunConfig::from_text(MINIMAL, false, &[]).unwrap();
        let r = cfg.resolve().unwrap();
        assert_eq!(r.train.env.name, Benchmark::DcMotor);
        assert!(r.train.env.unsafe_set.is_none());
        assert_eq!(r.train.trainer.k_max, 30);
        let (lo, hi) = r.train.env.rho_bounds();
        assert_eq!(r.train.reward.r_sat, choose_r_sat(lo, hi, 30, 1.0).unwrap());
        assert_eq!(r.eval.tolerances, vec![15, 25, 30]);
    }

    #[test]
    fn unknown_key_reports_path() {
        let text = "[env]\nname = \"dc_motor\"\n[agent]\nalgo = \"sac\"\nlearning_rate = 1.0\n";
        match RunConfig::from_text(text, false, &[]) {
            Err(ConfigError::Key { path, .. }) => assert_eq!(path, "agent.learning_rate"),
            other => panic!("{other:?}"),
        }
        let text = "[env]\nname = \"dc_motor\"\n[env.dc_motor]\nkk = 1.0\n";
        let err = RunConfig::from_text(text, false, &[]).unwrap_err().to_string();
        assert!(err.contains("env.dc_motor"), "{err}");
    }

    #[test]
    fn overrides_apply_with_types() {
        let o = [
            "trainer.m=1e4".to_string(),
            "agent.hidden=[32, 32]".into(),
            "reward.mode=sparse_rho".into(),
            "env.dc_motor.k=0.01".into(),
            "trainer.seed = 9".into(),
        ];
        let cfg = RunConfig::from_text(MINIMAL, false, &o).unwrap();
        assert_eq!(cfg.trainer.m, 10_000);
        assert_eq!(cfg.agent.hidden, Some(vec![32, 32]));
        assert_eq!(cfg.reward.mode, RewardMode::SparseRho);
        assert_eq!(cfg.resolve().unwrap().train.env.dc_motor.k, 0.01);
        assert_eq!(cfg.trainer.seed, 9);
        assert!(RunConfig::from_text(MINIMAL, false, &["trainer.m".into()]).is_err());
        assert!(RunConfig::from_text(MINIMAL, false, &["trainer.k_min=0".into()]).is_err());
    }

    #[test]
    fn json_and_toml_agree() {
        let cfg = RunConfig::preset(Benchmark::DcMotor, Task::ReachAvoid);
        let json = serde_json::to_string(&cfg).unwrap();
        let from_json = RunConfig::from_text(&json, true, &[]).unwrap();
        let from_toml = RunConfig::from_text(&cfg.to_toml().unwrap(), false, &[]).unwrap();
        assert_eq!(from_json, cfg);
        assert_eq!(from_toml, cfg);
    }

    #[test]
    fn hash_ignores_out_and_tracks_content() {
        let a = RunConfig::preset(Benchmark::DcMotor, Task::Reach);
        let mut b = a.clone();
        b.out = Some("elsewhere".into());
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        b.trainer.seed = 1;
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
        assert_eq!(a.hash().unwrap().len(), 64);
    }

    #[test]
    fn overlapping_preset_needs_explicit_unsafe_ball() {
        let mut cfg = RunConfig::preset(Benchmark::Bicycle, Task::ReachAvoid);
        assert!(cfg.resolve().is_err());
        cfg.env.unsafe_set = Some(Ball::new(vec![-1.0, -1.0, 0.0, 0.5], 0.3).unwrap());
        assert!(cfg.resolve().unwrap().train.env.unsafe_set.is_some());
    }

    #[test]
    fn reach_avoid_eval_requires_unsafe_set() {
        let text = "[env]\nname = \"dc_motor\"\n[eval]\ntask = \"reach_avoid\"\n";
        assert!(RunConfig::from_text(text, false, &[]).is_err());
    }
}
