//! Benchmark simulators used as black-box transition samplers.
//!
//! Three deterministic continuous-time models are integrated over a fixed
//! step `dt`: a DC motor position loop, a kinematic bicycle and a rigid-body
//! attitude controller. Each benchmark comes with a target ball and,
//! optionally, an unsafe ball in state space.

mod dynamics;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use dynamics::{attitude_derivative, Workspace};
pub use dynamics::{BicycleParams, DcMotorParams};

use crate::stl::{parse_formula, Formula, StlError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("unknown benchmark '{0}' (expected dc_motor, bicycle or attitude)")]
    UnknownBenchmark(String),
    #[error("invalid environment spec: {0}")]
    InvalidSpec(String),
    #[error("expected a vector of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("initial state lies outside the initial-state box")]
    OutsideInitBox,
    #[error("simulation diverged at step {step}")]
    Diverged { step: usize },
}

/// Closed Euclidean ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self, EnvError> {
        let ball = Self { center, radius };
        ball.validate()?;
        Ok(ball)
    }

    fn validate(&self) -> Result<(), EnvError> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(EnvError::InvalidSpec(format!(
                "ball radius must be positive, got {}",
                self.radius
            )));
        }
        if self.center.is_empty() || self.center.iter().any(|c| !c.is_finite()) {
            return Err(EnvError::InvalidSpec("ball center must be nonempty and finite".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// STL expression text `dist(x0,...;c0,...)` for this ball's center.
    /// `dist(x0,..;c0,..)`, the STL expression for the distance to the centre.
    pub fn dist_text(&self) -> String {
        let vars: Vec<String> = (0..self.center.len()).map(|i| format!("x{i}")).collect();
        let center: Vec<String> = self.center.iter().map(|c| format!("{c:?}")).collect();
        format!("dist({};{})", vars.join(","), center.join(","))
    }

    /// STL predicate holding exactly inside the ball.
    pub fn membership_text(&self) -> String {
        format!("{} <= {:?}", self.dist_text(), self.radius)
    }
}

/// Signed distance `||s - center|| - radius`; negative inside the ball.
pub fn dist_to_ball(s: &[f64], ball: &Ball) -> Result<f64, EnvError> {
    if s.len() != ball.dim() {
        return Err(EnvError::DimensionMismatch {
            expected: ball.dim(),
            got: s.len(),
        });
    }
    let sq: f64 = s.iter().zip(&ball.center).map(|(x, c)| (x - c) * (x - c)).sum();
    Ok(sq.sqrt() - ball.radius)
}

/// Inclusive membership: points on the sphere are inside.
pub fn in_ball(s: &[f64], ball: &Ball) -> Result<bool, EnvError> {
    Ok(dist_to_ball(s, ball)? <= 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Benchmark {
    DcMotor,
    Bicycle,
    Attitude,
}

impl Benchmark {
    pub const ALL: [Benchmark; 3] = [Benchmark::DcMotor, Benchmark::Bicycle, Benchmark::Attitude];

    pub fn state_dim(self) -> usize {
        match self {
            Benchmark::DcMotor => 3,
            Benchmark::Bicycle => 4,
            Benchmark::Attitude => 6,
        }
    }

    pub fn action_dim(self) -> usize {
        match self {
            Benchmark::DcMotor => 1,
            Benchmark::Bicycle => 2,
            Benchmark::Attitude => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::DcMotor => "dc_motor",
            Benchmark::Bicycle => "bicycle",
            Benchmark::Attitude => "attitude",
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Benchmark {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Benchmark::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| EnvError::UnknownBenchmark(s.to_string()))
    }
}

/// Recovery task: reach the target, or reach it while avoiding the unsafe ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Reach,
    ReachAvoid,
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reach" => Ok(Task::Reach),
            "reach_avoid" => Ok(Task::ReachAvoid),
            other => Err(format!("unknown task '{other}' (expected reach or reach_avoid)")),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Reach => "reach",
            Task::ReachAvoid => "reach_avoid",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    Rk4,
    Euler,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSpec {
    pub name: Benchmark,
    /// Time covered by one discrete step.
    pub dt: f64,
    /// Integrator sub-steps per `dt`.
    #[serde(default = "one")]
    pub substeps: usize,
    #[serde(default)]
    pub integrator: Integrator,
    pub action_low: Vec<f64>,
    pub action_high: Vec<f64>,
    pub init_low: Vec<f64>,
    pub init_high: Vec<f64>,
    pub target: Ball,
    #[serde(default, rename = "unsafe", skip_serializing_if = "Option::is_none")]
    pub unsafe_set: Option<Ball>,
    #[serde(default)]
    pub dc_motor: DcMotorParams,
    #[serde(default)]
    pub bicycle: BicycleParams,
}

impl EnvSpec {
    /// Default benchmark settings. Reach&Avoid is only offered where the
    /// unsafe ball is disjoint from the target.
    pub fn preset(name: Benchmark, task: Task) -> Result<Self, EnvError> {
        let mut spec = match name {
            Benchmark::DcMotor => Self {
                name,
                dt: 0.1,
                substeps: 1,
                integrator: Integrator::Rk4,
                action_low: vec![-24.0],
                action_high: vec![24.0],
                init_low: vec![-PI, -3.0, -2.0],
                init_high: vec![PI, 3.0, 2.0],
                target: Ball::new(vec![FRAC_PI_2, 0.0, 0.0], 0.5)?,
                unsafe_set: Some(Ball::new(vec![FRAC_PI_4, 0.0, 0.0], 0.2)?),
                dc_motor: DcMotorParams::default(),
                bicycle: BicycleParams::default(),
            },
            Benchmark::Bicycle => Self {
                name,
                dt: 0.1,
                substeps: 1,
                integrator: Integrator::Rk4,
                action_low: vec![-0.6, -3.0],
                action_high: vec![0.6, 3.0],
                init_low: vec![-2.0, -2.0, -PI, 0.0],
                init_high: vec![2.0, 2.0, PI, 2.0],
                target: Ball::new(vec![1.0, 1.0, 0.0, 2f64.sqrt()], 0.8)?,
                unsafe_set: Some(Ball::new(vec![0.5, 0.5, 0.0, 2f64.sqrt() / 2.0], 0.3)?),
                dc_motor: DcMotorParams::default(),
                bicycle: BicycleParams::default(),
            },
            Benchmark::Attitude => Self {
                name,
                dt: 0.1,
                substeps: 1,
                integrator: Integrator::Rk4,
                action_low: vec![-2.0; 3],
                action_high: vec![2.0; 3],
                init_low: vec![-1.0; 6],
                init_high: vec![1.0; 6],
                target: Ball::new(vec![0.0; 6], 0.8)?,
                unsafe_set: Some(Ball::new(vec![0.0, 0.0, 0.2, 0.0, 0.0, 0.0], 0.3)?),
                dc_motor: DcMotorParams::default(),
                bicycle: BicycleParams::default(),
            },
        };
        if task == Task::Reach {
            spec.unsafe_set = None;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn state_dim(&self) -> usize {
        self.name.state_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.name.action_dim()
    }

    pub fn task(&self) -> Task {
        if self.unsafe_set.is_some() {
            Task::ReachAvoid
        } else {
            Task::Reach
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let n = self.state_dim();
        let m = self.action_dim();
        let bad = |msg: String| Err(EnvError::InvalidSpec(msg));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if self.substeps == 0 {
            return bad("substeps must be at least 1".into());
        }
        for (label, v, len) in [
            ("action_low", &self.action_low, m),
            ("action_high", &self.action_high, m),
            ("init_low", &self.init_low, n),
            ("init_high", &self.init_high, n),
            ("target.center", &self.target.center, n),
        ] {
            if v.len() != len {
                return bad(format!("{label} has length {}, {} needs {len}", v.len(), self.name));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return bad(format!("{label} must be finite"));
            }
        }
        for (label, lo, hi) in [
            ("action", &self.action_low, &self.action_high),
            ("init", &self.init_low, &self.init_high),
        ] {
            if lo.iter().zip(hi.iter()).any(|(l, h)| l > h) {
                return bad(format!("{label} bounds are not ordered component-wise"));
            }
        }
        self.target.validate()?;
        if let Some(u) = &self.unsafe_set {
            u.validate()?;
            if u.dim() != n {
                return bad(format!("unsafe.center has length {}, {} needs {n}", u.dim(), self.name));
            }
            let gap = dist_to_ball(&u.center, &self.target)? - u.radius;
            if gap <= 0.0 {
                return bad("target and unsafe balls intersect".into());
            }
        }
        match self.name {
            Benchmark::DcMotor => self.dc_motor.validate().map_err(EnvError::InvalidSpec),
            Benchmark::Bicycle => self.bicycle.validate().map_err(EnvError::InvalidSpec),
            Benchmark::Attitude => Ok(()),
        }
    }

    /// `F[0,10](dist(x;target) <= r)`, the reach requirement.
    pub fn phi_target_text(&self) -> String {
        format!("F[0,10]({})", self.target.membership_text())
    }

    /// `!(dist(x;unsafe) <= r)`, the avoid requirement, if an unsafe ball exists.
    pub fn phi_unsafe_text(&self) -> Option<String> {
        self.unsafe_set.as_ref().map(|u| format!("!({})", u.membership_text()))
    }

    pub fn phi_target(&self) -> Result<Formula, StlError> {
        parse_formula(&self.phi_target_text(), self.state_dim())
    }

    pub fn phi_unsafe(&self) -> Result<Option<Formula>, StlError> {
        self.phi_unsafe_text()
            .map(|t| parse_formula(&t, self.state_dim()))
            .transpose()
    }

    /// Robustness range of the reach predicate over the initial-state box:
    /// `(radius - farthest corner distance, radius)`.
    pub fn rho_bounds(&self) -> (f64, f64) {
        let far: f64 = self
            .init_low
            .iter()
            .zip(&self.init_high)
            .zip(&self.target.center)
            .map(|((lo, hi), c)| {
                let d = (lo - c).abs().max((hi - c).abs());
                d * d
            })
            .sum::<f64>()
            .sqrt();
        (self.target.radius - far, self.target.radius)
    }

    /// Scales an action from `[-1, 1]` to the action box.
    pub fn scale_action(&self, unit: &[f64], out: &mut [f64]) {
        for ((o, u), (lo, hi)) in out
            .iter_mut()
            .zip(unit)
            .zip(self.action_low.iter().zip(&self.action_high))
        {
            *o = lo + 0.5 * (u + 1.0) * (hi - lo);
        }
    }
}

/// Uniform draw from the initial-state box.
pub fn sample_initial<R: Rng + ?Sized>(spec: &EnvSpec, rng: &mut R) -> Vec<f64> {
    spec.init_low
        .iter()
        .zip(&spec.init_high)
        .map(|(&lo, &hi)| if lo == hi { lo } else { rng.random_range(lo..=hi) })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub state: Vec<f64>,
    pub steps: usize,
}

/// A stepping simulator for one benchmark.
#[derive(Debug, Clone)]
pub struct Env {
    spec: EnvSpec,
    state: Vec<f64>,
    steps: usize,
    action: Vec<f64>,
    work: Workspace,
    rng: ChaCha8Rng,
}

impl Env {
    pub fn new(spec: EnvSpec, seed: u64) -> Result<Self, EnvError> {
        spec.validate()?;
        let n = spec.state_dim();
        Ok(Self {
            state: spec.init_low.clone(),
            steps: 0,
            action: vec![0.0; spec.action_dim()],
            work: Workspace::new(n),
            rng: ChaCha8Rng::seed_from_u64(seed),
            spec,
        })
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn snapshot(&self) -> EnvState {
        EnvState {
            state: self.state.clone(),
            steps: self.steps,
        }
    }

    /// Resets to `s0`, which must lie in the initial-state box.
    pub fn reset(&mut self, s0: &[f64]) -> Result<EnvState, EnvError> {
        self.check_dim(s0)?;
        let inside = s0
            .iter()
            .zip(self.spec.init_low.iter().zip(&self.spec.init_high))
            .all(|(x, (lo, hi))| lo <= x && x <= hi);
        if !inside {
            return Err(EnvError::OutsideInitBox);
        }
        self.reset_forced(s0)
    }

    /// Resets to any finite `s0`, ignoring the initial-state box.
    pub fn reset_forced(&mut self, s0: &[f64]) -> Result<EnvState, EnvError> {
        self.check_dim(s0)?;
        if s0.iter().any(|x| !x.is_finite()) {
            return Err(EnvError::InvalidSpec("initial state must be finite".into()));
        }
        self.state.copy_from_slice(s0);
        self.steps = 0;
        Ok(self.snapshot())
    }

    /// Resets to a uniform draw from the initial-state box using the
    /// environment's own seeded stream.
    pub fn reset_random(&mut self) -> EnvState {
        let s0 = sample_initial(&self.spec, &mut self.rng);
        self.state.copy_from_slice(&s0);
        self.steps = 0;
        self.snapshot()
    }

    fn check_dim(&self, s: &[f64]) -> Result<(), EnvError> {
        if s.len() != self.spec.state_dim() {
            return Err(EnvError::DimensionMismatch {
                expected: self.spec.state_dim(),
                got: s.len(),
            });
        }
        Ok(())
    }

    /// Advances one `dt` under action `a`, clipped to the action box.
    pub fn step(&mut self, a: &[f64]) -> Result<&[f64], EnvError> {
        if a.len() != self.spec.action_dim() {
            return Err(EnvError::DimensionMismatch {
                expected: self.spec.action_dim(),
                got: a.len(),
            });
        }
        for ((u, &x), (lo, hi)) in self
            .action
            .iter_mut()
            .zip(a)
            .zip(self.spec.action_low.iter().zip(&self.spec.action_high))
        {
            *u = x.clamp(*lo, *hi);
        }
        let h = self.spec.dt / self.spec.substeps as f64;
        let u = &self.action;
        let spec = &self.spec;
        let f = |x: &[f64], dx: &mut [f64]| match spec.name {
            Benchmark::DcMotor => spec.dc_motor.derivative(x, u, dx),
            Benchmark::Bicycle => spec.bicycle.derivative(x, u, dx),
            Benchmark::Attitude => attitude_derivative(x, u, dx),
        };
        for _ in 0..self.spec.substeps {
            match self.spec.integrator {
                Integrator::Rk4 => self.work.rk4(f, &mut self.state, h),
                Integrator::Euler => self.work.euler(f, &mut self.state, h),
            }
        }
        self.steps += 1;
        if self.state.iter().any(|x| !x.is_finite()) {
            return Err(EnvError::Diverged { step: self.steps });
        }
        Ok(&self.state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(name: Benchmark) -> Env {
        Env::new(EnvSpec::preset(name, Task::Reach).unwrap(), 0).unwrap()
    }

    #[test]
    fn dimensions_follow_benchmark() {
        for (b, n, m) in [
            (Benchmark::DcMotor, 3, 1),
            (Benchmark::Bicycle, 4, 2),
            (Benchmark::Attitude, 6, 3),
        ] {
            let e = env(b);
            assert_eq!((e.spec().state_dim(), e.spec().action_dim()), (n, m));
        }
    }

    #[test]
    fn zero_input_equilibria() {
        let mut e = env(Benchmark::DcMotor);
        e.reset(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(e.step(&[0.0]).unwrap(), &[0.0, 0.0, 0.0]);
        let mut e = env(Benchmark::Attitude);
        e.reset(&[0.0; 6]).unwrap();
        assert_eq!(e.step(&[0.0; 3]).unwrap(), &[0.0; 6]);
    }

    #[test]
    fn bicycle_straight_line() {
        let mut e = env(Benchmark::Bicycle);
        e.reset(&[0.0, 0.0, 0.0, 1.0]).unwrap();
        let s = e.step(&[0.0, 0.0]).unwrap();
        assert!((s[0] - 0.1).abs() < 1e-12);
        assert_eq!(&s[1..], &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn reset_checks_box_and_is_idempotent() {
        let mut e = env(Benchmark::DcMotor);
        let corner = e.spec().init_low.clone();
        let a = e.reset(&corner).unwrap();
        assert_eq!(a.steps, 0);
        assert_eq!(e.reset(&corner).unwrap(), a);
        assert_eq!(e.reset(&[10.0, 0.0, 0.0]), Err(EnvError::OutsideInitBox));
        assert!(e.reset_forced(&[10.0, 0.0, 0.0]).is_ok());
        assert!(matches!(e.reset(&[0.0]), Err(EnvError::DimensionMismatch { .. })));
    }

    #[test]
    fn actions_are_clipped() {
        let mut a = env(Benchmark::DcMotor);
        let mut b = env(Benchmark::DcMotor);
        a.reset(&[0.0; 3]).unwrap();
        b.reset(&[0.0; 3]).unwrap();
        assert_eq!(a.step(&[1000.0]).unwrap(), b.step(&[24.0]).unwrap());
    }

    #[test]
    fn ball_geometry() {
        let b = Ball::new(vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(dist_to_ball(&[0.0, 0.0], &b).unwrap(), -1.0);
        assert_eq!(dist_to_ball(&[1.0, 0.0], &b).unwrap(), 0.0);
        assert_eq!(dist_to_ball(&[3.0, 4.0], &b).unwrap(), 4.0);
        assert!(in_ball(&[1.0, 0.0], &b).unwrap());
        assert!(!in_ball(&[30.0, 0.0], &b).unwrap());
        assert!(dist_to_ball(&[0.0], &b).is_err());
        assert!(Ball::new(vec![0.0], 0.0).is_err());
    }

    #[test]
    fn sample_initial_stays_in_box() {
        let spec = EnvSpec::preset(Benchmark::Attitude, Task::Reach).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let s = sample_initial(&spec, &mut rng);
            for (x, (lo, hi)) in s.iter().zip(spec.init_low.iter().zip(&spec.init_high)) {
                assert!(lo <= x && x <= hi);
            }
        }
        let mut fixed = spec.clone();
        fixed.init_low = vec![0.25; 6];
        fixed.init_high = vec![0.25; 6];
        assert_eq!(sample_initial(&fixed, &mut rng), vec![0.25; 6]);
        let mut r1 = ChaCha8Rng::seed_from_u64(9);
        let mut r2 = ChaCha8Rng::seed_from_u64(9);
        assert_eq!(sample_initial(&spec, &mut r1), sample_initial(&spec, &mut r2));
    }

    #[test]
    fn overlapping_balls_are_rejected() {
        assert!(EnvSpec::preset(Benchmark::DcMotor, Task::ReachAvoid).is_ok());
        assert!(EnvSpec::preset(Benchmark::Bicycle, Task::ReachAvoid).is_err());
        assert!(EnvSpec::preset(Benchmark::Attitude, Task::ReachAvoid).is_err());
    }

    fn rk4_vs_euler(substeps: usize, amp: f64) -> f64 {
        let spec = EnvSpec::preset(Benchmark::DcMotor, Task::Reach).unwrap();
        let mut rk = Env::new(spec.clone(), 0).unwrap();
        let mut eu = Env::new(
            EnvSpec {
                integrator: Integrator::Euler,
                substeps,
                ..spec
            },
            0,
        )
        .unwrap();
        let mut worst: f64 = 0.0;
        for s0 in [[0.5, 1.0, -0.5], [3.0, 3.0, 2.0], [-3.0, -3.0, 2.0]] {
            rk.reset(&s0).unwrap();
            eu.reset(&s0).unwrap();
            for t in 0..30 {
                let v = [amp * (t as f64 * 0.3).sin()];
                rk.step(&v).unwrap();
                eu.step(&v).unwrap();
            }
            for (a, b) in rk.state().iter().zip(eu.state()) {
                worst = worst.max((a - b).abs());
            }
        }
        worst
    }

    #[test]
    fn rk4_matches_fine_euler_unforced() {
        let err = rk4_vs_euler(10, 0.0);
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn rk4_matches_finer_euler_forced() {
        let err = rk4_vs_euler(100, 1.0);
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn target_formula_parses() {
        for b in Benchmark::ALL {
            let spec = EnvSpec::preset(b, Task::Reach).unwrap();
            spec.phi_target().unwrap();
        }
        let spec = EnvSpec::preset(Benchmark::DcMotor, Task::ReachAvoid).unwrap();
        assert!(spec.phi_unsafe().unwrap().is_some());
    }
}
