//! Subcommands of the `asap-phi` executable: train, eval, monitor, verify
//! and bench. Each returns a [`CliError`] whose [`CliError::exit_code`] is 1
//! for failed runs or verification and 2 for usage and configuration errors.

pub mod bench;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use asap_phi::config::{read_structured, ConfigError, RunConfig};
use asap_phi::eval::tabular::{run_suite, SuiteConfig, SuiteReport};
use asap_phi::eval::{check_agent, evaluate, write_outputs, EvalError, EvalReport};
use asap_phi::rl::{Agent, RlError};
use asap_phi::stl::{boolean_sat, first_sat_time, parse_formula, Monitor, StlError, Trace};
use asap_phi::trainer::{train_with, write_log, TrainError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "+", env!("ASAP_PHI_GIT"));
/// Default output root when `ASAP_PHI_OUT` is unset.
pub const DEFAULT_OUT_ROOT: &str = "runs";

pub const CHECKPOINT: &str = "checkpoint.json";
pub const TRAIN_LOG: &str = "train_log.csv";
pub const CONFIG_ECHO: &str = "config.toml";
pub const RESOLVED: &str = "resolved.json";
pub const META: &str = "meta.json";
pub const EVAL_CURVE: &str = "eval_curve.csv";
pub const EVAL_DIR: &str = "eval";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{} holds a run with config hash {found}; this config hashes to {expected}", dir.display())]
    HashMismatch {
        dir: PathBuf,
        found: String,
        expected: String,
    },
    #[error("formula or trace: {0}")]
    Stl(#[from] StlError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("checkpoint: {0}")]
    Checkpoint(#[from] RlError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::HashMismatch { .. } | CliError::Stl(_) => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(io_err(path))
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(io_err(path))
}

/// Reproduction metadata stored next to every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub complete: bool,
    pub samples: usize,
    pub updates: u64,
    pub episodes: usize,
}

/// Loads a run configuration, applying overrides and then `--seed`.
pub fn load_config(path: &Path, seed: Option<u64>, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::from_path_with(path, overrides)?;
    if let Some(s) = seed {
        cfg.trainer.seed = s;
        cfg.resolve()?;
    }
    Ok(cfg)
}

/// Output root: `ASAP_PHI_OUT` if set, else [`DEFAULT_OUT_ROOT`].
pub fn out_root() -> PathBuf {
    std::env::var_os("ASAP_PHI_OUT").map_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT), PathBuf::from)
}

/// Run directory: `--out` as given, else the config's `out` under the output
/// root (absolute paths kept), else a name derived from the config.
pub fn run_dir(cfg: &RunConfig, out: Option<&Path>) -> PathBuf {
    if let Some(o) = out {
        return o.to_path_buf();
    }
    let root = out_root();
    match &cfg.out {
        Some(o) => root.join(o),
        None => root.join(format!(
            "{}_{}_{}_seed{}",
            cfg.env.name.name(),
            cfg.env.task,
            cfg.reward.mode.name(),
            cfg.trainer.seed
        )),
    }
}

/// Outcome of [`train_run`].
#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub dir: PathBuf,
    pub meta: Meta,
    pub reports: Vec<EvalReport>,
}

#[derive(Debug, Serialize)]
struct CurveRow {
    samples: usize,
    updates: u64,
    episodes: usize,
    tolerance: usize,
    success_rate: f64,
    violation_rate: f64,
    mean_steps: Option<f64>,
}

/// Trains, writes the run directory and evaluates the final policy into
/// `dir/eval`. A directory from an earlier run with the same config hash is
/// overwritten; a different hash is refused.
pub fn train_run(cfg: &RunConfig, dir: &Path) -> Result<TrainSummary, CliError> {
    let resolved = cfg.resolve()?;
    let hash = cfg.hash()?;
    let meta_path = dir.join(META);
    if meta_path.exists() {
        let old: Meta = serde_json::from_str(&read_file(&meta_path)?)?;
        if old.config_hash != hash {
            return Err(CliError::HashMismatch {
                dir: dir.to_path_buf(),
                found: old.config_hash,
                expected: hash,
            });
        }
    }
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut meta = Meta {
        version: VERSION.to_string(),
        config_hash: hash,
        seed: cfg.trainer.seed,
        complete: false,
        samples: 0,
        updates: 0,
        episodes: 0,
    };
    write_file(&meta_path, &(serde_json::to_string_pretty(&meta)? + "\n"))?;
    write_file(&dir.join(CONFIG_ECHO), &cfg.to_toml()?)?;
    write_file(&dir.join(RESOLVED), &(serde_json::to_string_pretty(&resolved)? + "\n"))?;

    let env = &resolved.train.env;
    let mut curve = Vec::new();
    let mut hook_err = None;
    let out = train_with(&resolved.train, |p| {
        if hook_err.is_some() {
            return;
        }
        match evaluate(p.agent, env, &resolved.eval) {
            Ok(run) => curve.extend(run.reports.iter().map(|r| CurveRow {
                samples: p.samples,
                updates: p.updates,
                episodes: p.episodes,
                tolerance: r.tolerance,
                success_rate: r.success_rate,
                violation_rate: r.violation_rate,
                mean_steps: r.mean_steps,
            })),
            Err(e) => hook_err = Some(e),
        }
    })?;
    if let Some(e) = hook_err {
        return Err(e.into());
    }
    write_file(&dir.join(CHECKPOINT), &out.agent.to_json()?)?;
    write_log(&dir.join(TRAIN_LOG), &out.log)?;
    if !curve.is_empty() {
        let mut w = csv::Writer::from_path(dir.join(EVAL_CURVE))?;
        for row in &curve {
            w.serialize(row)?;
        }
        w.flush().map_err(io_err(dir))?;
    }
    let run = evaluate(&out.agent, env, &resolved.eval)?;
    let eval_dir = dir.join(EVAL_DIR);
    if eval_dir.exists() {
        // Stale trace dumps from an earlier run would mix with the new ones.
        fs::remove_dir_all(&eval_dir).map_err(io_err(&eval_dir))?;
    }
    write_outputs(&eval_dir, &run, resolved.eval.dump)?;
    meta.complete = true;
    meta.samples = out.samples;
    meta.updates = out.updates;
    meta.episodes = out.log.len();
    write_file(&meta_path, &(serde_json::to_string_pretty(&meta)? + "\n"))?;
    Ok(TrainSummary {
        dir: dir.to_path_buf(),
        meta,
        reports: run.reports,
    })
}

pub fn print_reports(w: &mut dyn Write, reports: &[EvalReport]) -> std::io::Result<()> {
    writeln!(w, "task        tol  success  violation  mean_steps")?;
    for r in reports {
        let mean = r.mean_steps.map_or_else(|| "-".to_string(), |m| format!("{m:.2}"));
        writeln!(
            w,
            "{:<10} {:>4}  {:>7.3}  {:>9.3}  {:>10}",
            r.task.to_string(),
            r.tolerance,
            r.success_rate,
            r.violation_rate,
            mean
        )?;
    }
    Ok(())
}

/// `asap-phi train`.
pub fn cmd_train(
    config: &Path,
    seed: Option<u64>,
    out: Option<&Path>,
    overrides: &[String],
    w: &mut dyn Write,
) -> Result<TrainSummary, CliError> {
    let cfg = load_config(config, seed, overrides)?;
    let dir = run_dir(&cfg, out);
    let summary = train_run(&cfg, &dir)?;
    let m = &summary.meta;
    let _ = writeln!(
        w,
        "trained {} samples, {} updates, {} episodes -> {}",
        m.samples,
        m.updates,
        m.episodes,
        dir.display()
    );
    let _ = print_reports(w, &summary.reports);
    Ok(summary)
}

/// `asap-phi eval`: `input` is a run directory or a checkpoint file. A bare
/// checkpoint needs `config`; a run directory defaults to its echoed config.
/// Reports go to `out`, defaulting to `<run>/eval`.
pub fn cmd_eval(
    input: &Path,
    config: Option<&Path>,
    out: Option<&Path>,
    overrides: &[String],
    w: &mut dyn Write,
) -> Result<Vec<EvalReport>, CliError> {
    let (ckpt, run_dir) = if input.is_dir() {
        (input.join(CHECKPOINT), Some(input.to_path_buf()))
    } else {
        (input.to_path_buf(), None)
    };
    if !ckpt.is_file() {
        return Err(CliError::Usage(format!("no checkpoint at {}", ckpt.display())));
    }
    let cfg_path = match (config, &run_dir) {
        (Some(c), _) => c.to_path_buf(),
        (None, Some(d)) => d.join(CONFIG_ECHO),
        (None, None) => return Err(CliError::Usage("evaluating a bare checkpoint needs --config".into())),
    };
    let resolved = RunConfig::from_path_with(&cfg_path, overrides)?.resolve()?;
    let agent = Agent::from_json(&read_file(&ckpt)?)?;
    check_agent(&agent, &resolved.train.env)?;
    let run = evaluate(&agent, &resolved.train.env, &resolved.eval)?;
    let dest = match (out, &run_dir) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(d)) => d.join(EVAL_DIR),
        (None, None) => ckpt.parent().unwrap_or(Path::new(".")).join(EVAL_DIR),
    };
    write_outputs(&dest, &run, resolved.eval.dump)?;
    let _ = print_reports(w, &run.reports);
    let _ = writeln!(w, "reports -> {}", dest.display());
    Ok(run.reports)
}

/// Per-time robustness of a formula over a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorTable {
    /// `None` where the formula's window runs past the end of the trace.
    pub rho: Vec<Option<f64>>,
    pub sat: Vec<bool>,
    pub first_sat: Option<usize>,
}

pub fn monitor_trace(trace: &Trace, formula: &str) -> Result<MonitorTable, CliError> {
    let phi = parse_formula(formula, trace.dim())?;
    let rho = Monitor::new(&phi)
        .robustness_all(trace)
        .into_iter()
        .map(Result::ok)
        .collect();
    let sat = (0..trace.len())
        .map(|t| boolean_sat(trace, t, &phi).unwrap_or(false))
        .collect();
    Ok(MonitorTable {
        rho,
        sat,
        first_sat: first_sat_time(trace, &phi),
    })
}

/// `asap-phi monitor`: prints `t,rho,sat` rows and a final `first_sat_time`
/// row, with `nan` where the formula needs states past the trace end and
/// `inf` when it never holds.
pub fn cmd_monitor(trace: &Path, formula: &str, w: &mut dyn Write) -> Result<MonitorTable, CliError> {
    let file = fs::File::open(trace).map_err(io_err(trace))?;
    let tr = Trace::read_csv(file)?;
    let table = monitor_trace(&tr, formula)?;
    let mut text = String::from("t,rho,sat\n");
    for (t, (rho, sat)) in table.rho.iter().zip(&table.sat).enumerate() {
        let rho = rho.map_or_else(|| "nan".to_string(), |r| format!("{r:?}"));
        text.push_str(&format!("{t},{rho},{sat}\n"));
    }
    let first = table.first_sat.map_or_else(|| "inf".to_string(), |t| t.to_string());
    text.push_str(&format!("first_sat_time,{first}\n"));
    w.write_all(text.as_bytes()).map_err(io_err(trace))?;
    Ok(table)
}

/// `asap-phi verify`: runs the tabular suite from `config` (defaults when
/// absent). Failing pairs are printed and, with `out`, written to
/// `counterexamples.json`; the call then returns [`CliError::Failed`].
pub fn cmd_verify(
    config: Option<&Path>,
    seed: Option<u64>,
    out: Option<&Path>,
    w: &mut dyn Write,
) -> Result<SuiteReport, CliError> {
    let mut cfg: SuiteConfig = match config {
        Some(p) => read_structured(p)?,
        None => SuiteConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let report = run_suite(&cfg).map_err(|e| match e {
        EvalError::Config(_) | EvalError::Mdp(_) | EvalError::TooLarge { .. } => CliError::Usage(e.to_string()),
        other => other.into(),
    })?;
    let _ = writeln!(
        w,
        "{} random MDPs, {} fixtures, horizon {}, r_sat {}, discounts {:?}: {} failures",
        report.mdps,
        report.fixtures,
        report.horizon,
        report.r_sat,
        report.gammas,
        report.failures.len()
    );
    if report.passed() {
        return Ok(report);
    }
    let dump = serde_json::to_string_pretty(&report.failures)?;
    let _ = writeln!(w, "{dump}");
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        write_file(&dir.join("counterexamples.json"), &(dump + "\n"))?;
    }
    let f = &report.failures[0];
    Err(CliError::Failed(format!(
        "ordering violated in {}: {:?} (p = {}) is not strictly more likely than {:?} (p = {})",
        f.case, f.violation.earlier, f.violation.p_earlier, f.violation.later, f.violation.p_later
    )))
}
