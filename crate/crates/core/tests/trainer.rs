use asap_phi::env::{in_ball, Ball, Benchmark, Env, EnvSpec, Task};
use asap_phi::reward::RewardSpec;
use asap_phi::rl::{Agent, AgentConfig, Algo};
use asap_phi::rng::{stream, Stream};
use asap_phi::trainer::{
    episode_rollout, read_log, train, train_asap_phi, train_recovery, write_log, TrainConfig, TrainerParams,
};

fn config(task: Task, m: usize, k: (usize, usize)) -> TrainConfig {
    let env = EnvSpec::preset(Benchmark::DcMotor, task).unwrap();
    let (lo, hi) = env.rho_bounds();
    let mut agent = AgentConfig::new(Algo::Sac);
    agent.hidden = Some(vec![16, 16]);
    agent.batch_size = Some(16);
    agent.warmup = 20;
    TrainConfig {
        reward: RewardSpec::asap(lo, hi, k.1).unwrap(),
        env,
        agent,
        trainer: TrainerParams {
            k_min: k.0,
            k_max: k.1,
            m,
            seed: 3,
            ..TrainerParams::default()
        },
    }
}

#[test]
fn zero_budget_returns_initial_policy() {
    let cfg = config(Task::Reach, 0, (5, 5));
    let out = train(&cfg).unwrap();
    assert!(out.log.is_empty());
    assert_eq!(out.updates, 0);
    let fresh = Agent::new(
        cfg.agent.clone(),
        3,
        cfg.env.action_low.clone(),
        cfg.env.action_high.clone(),
        &mut stream(3, Stream::Weights),
    )
    .unwrap();
    assert_eq!(out.agent.actor().params(), fresh.actor().params());
}

#[test]
fn fixed_length_episodes_partition_budget() {
    let out = train(&config(Task::Reach, 50, (5, 5))).unwrap();
    assert_eq!(out.log.len(), 10);
    assert!(out.log.iter().all(|r| r.steps == 5 && !r.truncated));
    assert_eq!(out.samples, 50);
    assert_eq!(out.updates, 30);
}

#[test]
fn final_episode_truncated_to_budget() {
    let out = train(&config(Task::Reach, 52, (5, 5))).unwrap();
    assert_eq!(out.log.len(), 11);
    let last = out.log.last().unwrap();
    assert_eq!(last.steps, 2);
    assert!(last.truncated);
    assert_eq!(out.log.iter().map(|r| r.steps).sum::<usize>(), 52);
}

#[test]
fn training_is_deterministic() {
    let cfg = config(Task::Reach, 300, (5, 30));
    let a = train(&cfg).unwrap();
    let b = train(&cfg).unwrap();
    assert_eq!(a.log, b.log);
    assert_eq!(a.agent.to_json().unwrap(), b.agent.to_json().unwrap());
    let mut other = cfg.clone();
    other.trainer.seed = 4;
    assert_ne!(train(&other).unwrap().log, a.log);
}

#[test]
fn episode_lengths_are_uniform() {
    // No learning (warmup covers the budget), so this only exercises sampling.
    let mut cfg = config(Task::Reach, 6000, (1, 5));
    cfg.agent.warmup = usize::MAX;
    let out = train(&cfg).unwrap();
    let mut counts = [0usize; 5];
    for r in out.log.iter().filter(|r| !r.truncated) {
        counts[r.steps - 1] += 1;
    }
    let n: usize = counts.iter().sum();
    assert!(n >= 1000, "{n} episodes");
    let e = n as f64 / 5.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    // 99.9% quantile of chi-square with 4 degrees of freedom.
    assert!(chi2 < 18.47, "chi2 {chi2}, counts {counts:?}");
}

#[test]
fn log_csv_round_trip() {
    let out = train(&config(Task::Reach, 40, (3, 7))).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("log.csv");
    write_log(&p, &out.log).unwrap();
    let text = std::fs::read_to_string(&p).unwrap();
    assert!(text.starts_with("episode,steps,return,final_rho,reached,steps_to_reach,violated,truncated"));
    assert_eq!(read_log(&p).unwrap(), out.log);
}

/// Reach&Avoid DC motor with an unsafe ball grown to nearly touch the target.
fn tight_avoid(m: usize) -> TrainConfig {
    let mut cfg = config(Task::ReachAvoid, m, (30, 30));
    cfg.env.unsafe_set = Some(Ball::new(vec![std::f64::consts::FRAC_PI_4, 0.0, 0.0], 0.28).unwrap());
    cfg.agent.warmup = usize::MAX;
    cfg
}

#[test]
fn unsafe_start_ends_episode_without_samples() {
    let mut cfg = tight_avoid(20_000);
    cfg.env.unsafe_set = Some(Ball::new(vec![0.0, 0.0, 0.0], 1.5).unwrap());
    cfg.env.target = Ball::new(vec![2.5, 0.0, 0.0], 0.5).unwrap();
    let out = train_recovery(&cfg).unwrap();
    let empty: Vec<_> = out.log.iter().filter(|r| r.steps == 0).collect();
    assert!(!empty.is_empty());
    assert!(empty.iter().all(|r| r.violated && !r.truncated));
    assert_eq!(out.log.iter().map(|r| r.steps).sum::<usize>(), 20_000);
}

#[test]
fn initial_box_inside_unsafe_set_is_an_error() {
    let mut cfg = tight_avoid(100);
    cfg.env.init_low = vec![0.7, 0.0, 0.0];
    cfg.env.init_high = vec![0.8, 0.0, 0.0];
    assert!(train_recovery(&cfg).is_err());
}

#[test]
fn violating_transitions_never_pay_r_sat() {
    // Start inside the target with the unsafe ball one small current jump away.
    let mut cfg = tight_avoid(20_000);
    cfg.env.init_low = vec![-0.2; 3];
    cfg.env.init_high = vec![0.2; 3];
    cfg.env.action_low = vec![-2.0];
    cfg.env.action_high = vec![2.0];
    cfg.env.target = Ball::new(vec![0.0; 3], 0.5).unwrap();
    cfg.env.unsafe_set = Some(Ball::new(vec![0.0, 0.0, 0.9], 0.35).unwrap());
    let out = train_recovery(&cfg).unwrap();
    let target = &cfg.env.target;
    let unsafe_set = cfg.env.unsafe_set.as_ref().unwrap();
    let mut from_target = 0;
    let mut violations = 0;
    for i in 0..out.buffer.len() {
        let t = out.buffer.get(i).unwrap();
        assert_eq!(t.done, in_ball(&t.s_next, unsafe_set).unwrap());
        if t.done {
            violations += 1;
            assert!(t.r < cfg.reward.r_sat, "violating transition paid {}", t.r);
            if in_ball(&t.s, target).unwrap() {
                from_target += 1;
            }
        }
    }
    assert!(violations > 0);
    // The case the post-state rule exists for: leaving the target straight
    // into the unsafe set.
    assert!(
        from_target > 0,
        "no target-to-unsafe transition among {violations} violations"
    );
    assert_eq!(out.log.iter().filter(|r| r.violated).count(), violations);
}

#[test]
fn recovery_matches_reach_until_first_violation() {
    let mut cfg = config(Task::ReachAvoid, 3000, (10, 30));
    cfg.agent.warmup = 500;
    // A wide unsafe ball so the early policy is sure to hit it.
    let c = std::f64::consts::FRAC_PI_2 - 1.2;
    cfg.env.unsafe_set = Some(Ball::new(vec![c, 0.0, 0.0], 0.6).unwrap());
    let reach = train_asap_phi(&cfg).unwrap();
    let avoid = train_recovery(&cfg).unwrap();
    let first = avoid
        .log
        .iter()
        .position(|r| r.violated)
        .expect("some episode violates");
    assert!(first > 0);
    assert_eq!(reach.log[..first], avoid.log[..first]);
}

#[test]
fn reach_dispatch_ignores_missing_unsafe_set() {
    let cfg = config(Task::Reach, 200, (5, 10));
    assert!(train_recovery(&cfg).is_err());
    assert_eq!(train(&cfg).unwrap().log, train_asap_phi(&cfg).unwrap().log);
}

#[test]
fn invalid_lengths_rejected() {
    let mut cfg = config(Task::Reach, 10, (5, 5));
    cfg.trainer.k_min = 6;
    assert!(train(&cfg).is_err());
    cfg.trainer.k_min = 0;
    assert!(train(&cfg).is_err());
}

#[test]
fn hook_fires_on_cadence() {
    let mut cfg = config(Task::Reach, 100, (5, 5));
    cfg.trainer.eval_every = Some(30);
    let mut seen = Vec::new();
    asap_phi::trainer::train_with(&cfg, |p| seen.push(p.samples)).unwrap();
    assert_eq!(seen, vec![30, 60, 90, 100]);
}

mod rollout {
    use super::*;

    fn still(_: &[f64]) -> Vec<f64> {
        vec![0.0]
    }

    /// Saturated PD controller steering the angle to `goal`.
    fn pd(goal: f64) -> impl Fn(&[f64]) -> Vec<f64> {
        move |s: &[f64]| vec![(-5.0 * (s[0] - goal) - s[1]).clamp(-24.0, 24.0)]
    }

    #[test]
    fn zero_length_is_single_state() {
        let spec = EnvSpec::preset(Benchmark::DcMotor, Task::Reach).unwrap();
        let mut env = Env::new(spec, 0).unwrap();
        let r = episode_rollout(&still, &mut env, &[0.0, 0.0, 0.0], 0, false).unwrap();
        assert_eq!(r.trace.len(), 1);
        assert_eq!(r.reached_at, None);
    }

    #[test]
    fn start_in_target_reaches_at_zero() {
        let spec = EnvSpec::preset(Benchmark::DcMotor, Task::Reach).unwrap();
        let mut env = Env::new(spec, 0).unwrap();
        let r = episode_rollout(&still, &mut env, &[1.5, 0.0, 0.0], 10, false).unwrap();
        assert_eq!(r.reached_at, Some(0));
        assert_eq!(r.trace.len(), 11);
    }

    #[test]
    fn reproducible() {
        let spec = EnvSpec::preset(Benchmark::DcMotor, Task::Reach).unwrap();
        let push = pd(std::f64::consts::FRAC_PI_2);
        let mut env = Env::new(spec, 0).unwrap();
        let a = episode_rollout(&push, &mut env, &[-1.0, 0.5, 0.0], 30, false).unwrap();
        let b = episode_rollout(&push, &mut env, &[-1.0, 0.5, 0.0], 30, false).unwrap();
        assert_eq!(a, b);
        assert!(a.reached_at.is_some());
    }

    #[test]
    fn violation_truncates_trace() {
        let spec = EnvSpec::preset(Benchmark::DcMotor, Task::ReachAvoid).unwrap();
        let push = pd(std::f64::consts::FRAC_PI_4);
        let mut env = Env::new(spec.clone(), 0).unwrap();
        let r = episode_rollout(&push, &mut env, &[0.0, 0.0, 0.0], 30, true).unwrap();
        let t = r.violated_at.expect("settles into the unsafe ball");
        assert_eq!(r.trace.len(), t + 1);
        assert!(in_ball(r.trace.state(t), spec.unsafe_set.as_ref().unwrap()).unwrap());
        let free = episode_rollout(&push, &mut env, &[0.0, 0.0, 0.0], 30, false).unwrap();
        assert_eq!(free.trace.len(), 31);
        assert!(t < 30);
        assert_eq!(free.violated_at, None);
    }
}
