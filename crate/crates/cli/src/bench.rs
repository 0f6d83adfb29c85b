//! Named benchmark suites: groups of training runs whose final evaluations
//! are collected into one `summary.csv`.

use std::io::Write;
use std::path::Path;

use asap_phi::config::RunConfig;
use asap_phi::env::{Benchmark, Task};
use asap_phi::eval::DumpMode;
use asap_phi::reward::RewardMode;
use serde::Serialize;

use crate::{train_run, CliError, TrainSummary};

/// Suite names with a one-line description.
pub const SUITES: &[(&str, &str)] = &[
    (
        "smoke",
        "DC motor reach, 1e4 steps each with asap, sparse rho and distance rewards",
    ),
    (
        "dc_motor",
        "DC motor reach, 1e5 steps each with asap, sparse rho and distance rewards",
    ),
    (
        "dc_motor_full",
        "DC motor reach, 1e6 steps each with asap, sparse rho and distance rewards",
    ),
    ("dc_motor_avoid", "DC motor reach-avoid, 1e5 steps with the asap reward"),
    ("bicycle", "bicycle reach, 3e6 steps with the asap reward (hours)"),
    ("attitude", "attitude reach, 3e6 steps with the asap reward (hours)"),
];

const ABLATION: [RewardMode; 3] = [RewardMode::Asap, RewardMode::SparseRho, RewardMode::Distance];

fn base(name: Benchmark, task: Task, m: usize, seed: u64) -> RunConfig {
    let mut cfg = RunConfig::preset(name, task);
    cfg.trainer.m = m;
    cfg.trainer.seed = seed;
    cfg.trainer.eval_every = Some(m / 10);
    cfg
}

fn ablation(m: usize, n_points: usize, seed: u64) -> Vec<(String, RunConfig)> {
    ABLATION
        .iter()
        .map(|&mode| {
            let mut cfg = base(Benchmark::DcMotor, Task::Reach, m, seed);
            cfg.reward.mode = mode;
            cfg.eval.n_points = n_points;
            (mode.name().to_string(), cfg)
        })
        .collect()
}

/// The labelled run configurations of a suite.
pub fn suite_runs(suite: &str, seed: u64) -> Result<Vec<(String, RunConfig)>, CliError> {
    let runs = match suite {
        "smoke" => ablation(10_000, 200, seed),
        "dc_motor" => ablation(100_000, 1000, seed),
        "dc_motor_full" => ablation(1_000_000, 1000, seed),
        "dc_motor_avoid" => {
            let mut cfg = base(Benchmark::DcMotor, Task::ReachAvoid, 100_000, seed);
            cfg.eval.dump = DumpMode::Failures;
            vec![("asap".to_string(), cfg)]
        }
        "bicycle" => vec![(
            "asap".to_string(),
            base(Benchmark::Bicycle, Task::Reach, 3_000_000, seed),
        )],
        "attitude" => vec![(
            "asap".to_string(),
            base(Benchmark::Attitude, Task::Reach, 3_000_000, seed),
        )],
        other => {
            let names: Vec<&str> = SUITES.iter().map(|(n, _)| *n).collect();
            return Err(CliError::Usage(format!(
                "unknown suite '{other}'; available: {}",
                names.join(", ")
            )));
        }
    };
    Ok(runs)
}

#[derive(Debug, Serialize)]
struct SummaryRow<'a> {
    run: &'a str,
    task: String,
    tolerance: usize,
    success_rate: f64,
    violation_rate: f64,
    mean_steps: Option<f64>,
    samples: usize,
}

/// `asap-phi bench`: trains every run of `suite` into `<root>/<suite>/<label>`
/// and writes `<root>/<suite>/summary.csv`. Overrides apply to every run.
pub fn cmd_bench(
    suite: &str,
    root: &Path,
    seed: u64,
    overrides: &[String],
    w: &mut dyn Write,
) -> Result<Vec<(String, TrainSummary)>, CliError> {
    let runs = suite_runs(suite, seed)?;
    let dir = root.join(suite);
    let mut done = Vec::new();
    for (label, cfg) in runs {
        let cfg = cfg.with_overrides(overrides)?;
        let _ = writeln!(w, "[{suite}] {label}: {} samples", cfg.trainer.m);
        let summary = train_run(&cfg, &dir.join(&label))?;
        let _ = crate::print_reports(w, &summary.reports);
        done.push((label, summary));
    }
    let path = dir.join("summary.csv");
    let mut csv = csv::Writer::from_path(&path)?;
    for (label, s) in &done {
        for r in &s.reports {
            csv.serialize(SummaryRow {
                run: label,
                task: r.task.to_string(),
                tolerance: r.tolerance,
                success_rate: r.success_rate,
                violation_rate: r.violation_rate,
                mean_steps: r.mean_steps,
                samples: s.meta.samples,
            })?;
        }
    }
    csv.flush().map_err(|source| CliError::Io { path, source })?;
    Ok(done)
}
