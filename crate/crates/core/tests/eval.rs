use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use asap_phi::env::{dist_to_ball, Benchmark, EnvSpec, Task};
use asap_phi::eval::tabular::{run_suite, SuiteConfig};
use asap_phi::eval::{check_agent, evaluate, write_outputs, DumpMode, EvalConfig, Outcome};
use asap_phi::rl::{Agent, AgentConfig, Algo};
use asap_phi::stl::Trace;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn still(_: &[f64]) -> Vec<f64> {
    vec![0.0]
}

fn pd(goal: f64) -> impl Fn(&[f64]) -> Vec<f64> + Sync {
    move |s: &[f64]| vec![(-5.0 * (s[0] - goal) - s[1]).clamp(-24.0, 24.0)]
}

fn cfg(n: usize, tolerances: Vec<usize>) -> EvalConfig {
    EvalConfig {
        n_points: n,
        tolerances,
        seed: 7,
        ..EvalConfig::default()
    }
}

#[test]
fn resting_in_target_succeeds_at_zero() {
    let mut spec = EnvSpec::preset(Benchmark::DcMotor, Task::Reach).unwrap();
    spec.init_low = vec![FRAC_PI_2, 0.0, 0.0];
    spec.init_high = vec![FRAC_PI_2, 0.0, 0.0];
    let run = evaluate(&still, &spec, &cfg(5, vec![0, 30])).unwrap();
    for rep in &run.reports {
        assert_eq!(rep.success_rate, 1.0);
        assert_eq!(rep.median_steps, Some(0.0));
    }
}

#[test]
fn unsafe_start_is_immediate_violation() {
    let mut spec = EnvSpec::preset(Benchmark::DcMotor, Task::ReachAvoid).unwrap();
    spec.init_low = vec![FRAC_PI_4, 0.0, 0.0];
    spec.init_high = vec![FRAC_PI_4, 0.0, 0.0];
    let run = evaluate(&pd(FRAC_PI_2), &spec, &cfg(3, vec![30])).unwrap();
    let rep = &run.reports[0];
    assert_eq!(rep.violations, 3);
    assert_eq!(rep.success_rate, 0.0);
    assert!(rep.records.iter().all(|e| e.violation_step == Some(0)));
    // Under plain reach the same starts are fine.
    let mut reach = cfg(3, vec![30]);
    reach.task = Some(Task::Reach);
    assert_eq!(
        evaluate(&pd(FRAC_PI_2), &spec, &reach).unwrap().reports[0].success_rate,
        1.0
    );
}

#[test]
fn report_counts_and_monotone_tolerance() {
    let spec = EnvSpec::preset(Benchmark::DcMotor, Task::Reach).unwrap();
    let run = evaluate(&pd(FRAC_PI_2), &spec, &cfg(200, vec![5, 10, 15, 25, 30])).unwrap();
    let mut prev = 0.0;
    for rep in &run.reports {
        assert_eq!(rep.success_rate, rep.successes as f64 / 200.0);
        assert_eq!(rep.successes + rep.timeouts + rep.violations + rep.diverged, 200);
        assert!(rep.success_rate >= prev);
        prev = rep.success_rate;
    }
    assert!(prev > 0.9, "PD controller should reach within 30 steps: {prev}");
}

#[test]
fn deterministic_and_independent_of_thread_count() {
    let spec = EnvSpec::preset(Benchmark::DcMotor, Task::ReachAvoid).unwrap();
    let policy = pd(FRAC_PI_2);
    let run_on = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| evaluate(&policy, &spec, &cfg(64, vec![15, 30])).unwrap())
    };
    let a = run_on(1);
    let b = run_on(3);
    assert_eq!(a.reports, b.reports);
    assert_eq!(a.rollouts, b.rollouts);
}

#[test]
fn violation_dumps_end_inside_unsafe_set() {
    let spec = EnvSpec::preset(Benchmark::DcMotor, Task::ReachAvoid).unwrap();
    let mut c = cfg(100, vec![15, 30]);
    c.dump = DumpMode::Failures;
    // Steering to the unsafe centre produces violations.
    let run = evaluate(&pd(FRAC_PI_4), &spec, &c).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_outputs(dir.path(), &run, c.dump).unwrap();
    for t in [15, 30] {
        assert!(dir.path().join(format!("report_tol{t}.csv")).exists());
        let summary = std::fs::read_to_string(dir.path().join(format!("summary_tol{t}.json"))).unwrap();
        assert!(summary.contains("\"success_rate\""));
    }
    let mut violations = 0;
    for entry in std::fs::read_dir(dir.path().join("traces")).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        assert!(!name.contains("success"));
        if name.contains("violation") {
            violations += 1;
            let tr = Trace::read_csv(std::fs::File::open(&path).unwrap()).unwrap();
            let last = tr.state(tr.len() - 1);
            assert!(dist_to_ball(last, spec.unsafe_set.as_ref().unwrap()).unwrap() <= 0.0);
        }
    }
    assert_eq!(violations, run.reports[1].violations);
    assert!(violations > 0);
}

#[test]
fn outcomes_classified() {
    let spec = EnvSpec::preset(Benchmark::DcMotor, Task::ReachAvoid).unwrap();
    let run = evaluate(&pd(FRAC_PI_2), &spec, &cfg(100, vec![30])).unwrap();
    for (e, r) in run.reports[0].records.iter().zip(&run.rollouts) {
        match e.outcome {
            Outcome::Success => assert!(e.steps_to_reach.unwrap() <= 30),
            Outcome::Violation => assert!(r.violated_at.is_some() && r.reached_at.is_none()),
            Outcome::Timeout => assert!(r.reached_at.is_none()),
            Outcome::Diverged => assert!(r.diverged),
        }
    }
}

#[test]
fn mismatched_checkpoint_rejected() {
    let spec = EnvSpec::preset(Benchmark::Bicycle, Task::Reach).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut ac = AgentConfig::new(Algo::Sac);
    ac.hidden = Some(vec![8]);
    let agent = Agent::new(ac, 3, vec![-24.0], vec![24.0], &mut rng).unwrap();
    assert!(check_agent(&agent, &spec).is_err());
    let dc = EnvSpec::preset(Benchmark::DcMotor, Task::Reach).unwrap();
    check_agent(&agent, &dc).unwrap();
}

#[test]
fn invalid_eval_configs_rejected() {
    let spec = EnvSpec::preset(Benchmark::DcMotor, Task::Reach).unwrap();
    assert!(evaluate(&still, &spec, &cfg(0, vec![30])).is_err());
    assert!(evaluate(&still, &spec, &cfg(5, vec![])).is_err());
    let mut avoid = cfg(5, vec![30]);
    avoid.task = Some(Task::ReachAvoid);
    assert!(evaluate(&still, &spec, &avoid).is_err());
}

#[test]
fn default_random_mdp_suite_passes() {
    let rep = run_suite(&SuiteConfig::default()).unwrap();
    assert_eq!(rep.mdps, 100);
    assert!(rep.passed(), "{:?}", rep.failures.first());
}
