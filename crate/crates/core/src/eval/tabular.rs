//! Exact finite-horizon oracle for small tabular MDPs.
//!
//! Rewards follow the ASAP scheme on a per-state satisfaction predicate:
//! a state pays `r_sat` when it satisfies the formula and its robustness
//! otherwise. Rewards are collected at steps `0..H`, so a trace of interest
//! is `s_0 .. s_{H-1}`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::reward::reward_asap;
use crate::rng::{stream, Stream};
use crate::stl::{boolean_sat, Formula, Trace};

/// Trace enumeration is refused beyond this many traces per initial state.
pub const MAX_TRACES: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    /// `p[s][a][s2]`.
    pub p: Vec<Vec<Vec<f64>>>,
    pub sat: Vec<bool>,
    /// Robustness of each state; only read for unsatisfying states.
    pub rho: Vec<f64>,
}

impl TabularMdp {
    pub fn n_states(&self) -> usize {
        self.p.len()
    }

    pub fn n_actions(&self) -> usize {
        self.p.first().map_or(0, Vec::len)
    }

    /// Deterministic MDP from a successor table `next[s][a]`.
    pub fn deterministic(next: &[Vec<usize>], sat: Vec<bool>, rho: Vec<f64>) -> Result<Self, EvalError> {
        let n = next.len();
        let p = next
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&s2| {
                        let mut d = vec![0.0; n];
                        if s2 < n {
                            d[s2] = 1.0;
                        }
                        d
                    })
                    .collect()
            })
            .collect();
        let mdp = Self { p, sat, rho };
        mdp.validate()?;
        Ok(mdp)
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let n = self.n_states();
        let m = self.n_actions();
        if n == 0 || m == 0 {
            return Err(EvalError::Mdp("an MDP needs at least one state and one action".into()));
        }
        if self.sat.len() != n || self.rho.len() != n {
            return Err(EvalError::Mdp("sat and rho need one entry per state".into()));
        }
        for (s, row) in self.p.iter().enumerate() {
            if row.len() != m {
                return Err(EvalError::Mdp(format!(
                    "state {s} has {} actions, expected {m}",
                    row.len()
                )));
            }
            for (a, d) in row.iter().enumerate() {
                if d.len() != n || d.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                    return Err(EvalError::Mdp(format!(
                        "P[{s}][{a}] is not a distribution over {n} states"
                    )));
                }
                let total: f64 = d.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(EvalError::Mdp(format!("P[{s}][{a}] sums to {total}")));
                }
            }
        }
        if self.rho.iter().any(|r| !r.is_finite()) {
            return Err(EvalError::Mdp("rho must be finite".into()));
        }
        Ok(())
    }

    fn reward(&self, s: usize, r_sat: f64) -> f64 {
        if self.sat[s] {
            r_sat
        } else {
            self.rho[s]
        }
    }
}

/// Time-indexed stochastic policy `probs[t][s][a]`, `t < H`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TabularPolicy {
    pub probs: Vec<Vec<Vec<f64>>>,
}

impl TabularPolicy {
    /// Deterministic policy picking `choice[t][s]`.
    pub fn deterministic(choice: &[Vec<usize>], n_actions: usize) -> Self {
        let probs = choice
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&a| {
                        let mut d = vec![0.0; n_actions];
                        d[a] = 1.0;
                        d
                    })
                    .collect()
            })
            .collect();
        Self { probs }
    }

    /// Same action in every state at every step.
    pub fn constant(action: usize, n_states: usize, n_actions: usize, horizon: usize) -> Self {
        Self::deterministic(&vec![vec![action; n_states]; horizon], n_actions)
    }

    pub fn horizon(&self) -> usize {
        self.probs.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueSolution {
    /// `q[t][s][a]` for `t < H`.
    pub q: Vec<Vec<Vec<f64>>>,
    /// `v[t][s]` for `t <= H`, with `v[H] = 0`.
    pub v: Vec<Vec<f64>>,
    /// Greedy policy, ties to the lowest action index.
    pub policy: TabularPolicy,
}

/// Backward induction over `V_t(s) = r(s) + gamma * max_a E[V_{t+1}]`,
/// `V_H = 0`.
pub fn value_iteration(mdp: &TabularMdp, r_sat: f64, gamma: f64, horizon: usize) -> Result<ValueSolution, EvalError> {
    mdp.validate()?;
    if !(0.0..=1.0).contains(&gamma) {
        return Err(EvalError::Mdp(format!("gamma {gamma} outside [0, 1]")));
    }
    let (n, m) = (mdp.n_states(), mdp.n_actions());
    let mut v = vec![vec![0.0; n]; horizon + 1];
    let mut q = vec![vec![vec![0.0; m]; n]; horizon];
    let mut choice = vec![vec![0usize; n]; horizon];
    for t in (0..horizon).rev() {
        for s in 0..n {
            let r = mdp.reward(s, r_sat);
            let mut best = f64::NEG_INFINITY;
            for a in 0..m {
                let ev: f64 = mdp.p[s][a].iter().zip(&v[t + 1]).map(|(p, x)| p * x).sum();
                let val = r + gamma * ev;
                q[t][s][a] = val;
                if val > best {
                    best = val;
                    choice[t][s] = a;
                }
            }
            v[t][s] = best;
        }
    }
    Ok(ValueSolution {
        q,
        v,
        policy: TabularPolicy::deterministic(&choice, m),
    })
}

/// Pair of traces from one initial state violating the ASAP ordering: the
/// earlier-satisfying trace is not strictly more likely.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingViolation {
    pub earlier: Vec<usize>,
    pub later: Vec<usize>,
    pub t_earlier: usize,
    /// `None` when the later trace never satisfies.
    pub t_later: Option<usize>,
    pub p_earlier: f64,
    pub p_later: f64,
}

const PROB_TOL: f64 = 1e-12;

fn first_sat(mdp: &TabularMdp, trace: &[usize]) -> Option<usize> {
    trace.iter().position(|&s| mdp.sat[s])
}

/// All traces `s_0 .. s_{H-1}` from `s0` that the MDP can produce under
/// some action sequence, with their probability under `policy`.
fn feasible_traces(mdp: &TabularMdp, policy: &TabularPolicy, s0: usize, horizon: usize) -> Vec<(Vec<usize>, f64)> {
    let mut out = Vec::new();
    let mut stack = vec![(vec![s0], 1.0)];
    while let Some((tr, p)) = stack.pop() {
        let t = tr.len() - 1;
        if tr.len() == horizon {
            out.push((tr, p));
            continue;
        }
        let s = tr[t];
        for s2 in 0..mdp.n_states() {
            let feasible = (0..mdp.n_actions()).any(|a| mdp.p[s][a][s2] > 0.0);
            if !feasible {
                continue;
            }
            let step: f64 = (0..mdp.n_actions())
                .map(|a| policy.probs[t][s][a] * mdp.p[s][a][s2])
                .sum();
            let mut next = tr.clone();
            next.push(s2);
            stack.push((next, p * step));
        }
    }
    out
}

/// Checks that for every initial state and every pair of feasible traces
/// with `t_phi(earlier) < t_phi(later)`, the earlier one is strictly more
/// likely under `policy`. Pairs where both traces are impossible under the
/// policy carry no preference and are skipped.
pub fn check_asap_ordering(
    mdp: &TabularMdp,
    policy: &TabularPolicy,
    horizon: usize,
) -> Result<Option<OrderingViolation>, EvalError> {
    mdp.validate()?;
    if horizon == 0 || policy.horizon() < horizon {
        return Err(EvalError::Mdp(format!(
            "policy covers {} steps, horizon is {horizon}",
            policy.horizon()
        )));
    }
    let (n, m) = (mdp.n_states(), mdp.n_actions());
    if policy
        .probs
        .iter()
        .any(|row| row.len() != n || row.iter().any(|d| d.len() != m))
    {
        return Err(EvalError::Mdp("policy shape does not match the MDP".into()));
    }
    let bound = (n as f64).powi(horizon as i32 - 1);
    if bound > MAX_TRACES as f64 {
        return Err(EvalError::TooLarge {
            traces: bound,
            limit: MAX_TRACES,
        });
    }
    for s0 in 0..n {
        let traces = feasible_traces(mdp, policy, s0, horizon);
        let timed: Vec<(Option<usize>, &Vec<usize>, f64)> =
            traces.iter().map(|(tr, p)| (first_sat(mdp, tr), tr, *p)).collect();
        for (ta, ea, pa) in &timed {
            let Some(ta) = *ta else { continue };
            for (tb, eb, pb) in &timed {
                let later = match tb {
                    None => true,
                    Some(tb) => ta < *tb,
                };
                if !later || (*pa <= PROB_TOL && *pb <= PROB_TOL) {
                    continue;
                }
                if !(*pb < *pa - PROB_TOL) {
                    return Ok(Some(OrderingViolation {
                        earlier: (*ea).clone(),
                        later: (*eb).clone(),
                        t_earlier: ta,
                        t_later: *tb,
                        p_earlier: *pa,
                        p_later: *pb,
                    }));
                }
            }
        }
    }
    Ok(None)
}

/// Random deterministic MDP with `2..=max_states` states and
/// `1..=max_actions` actions. At least one state satisfies; satisfying states
/// are absorbing. Robustness of other states is uniform in `[-1, 1)`.
pub fn random_mdp<R: Rng + ?Sized>(rng: &mut R, max_states: usize, max_actions: usize) -> TabularMdp {
    let n = rng.random_range(2..=max_states.max(2));
    let m = rng.random_range(1..=max_actions.max(1));
    let mut sat: Vec<bool> = (0..n).map(|_| rng.random_bool(0.25)).collect();
    if !sat.contains(&true) {
        let i = rng.random_range(0..n);
        sat[i] = true;
    }
    let rho = (0..n)
        .map(|s| if sat[s] { 0.0 } else { rng.random_range(-1.0..1.0) })
        .collect();
    let next: Vec<Vec<usize>> = (0..n)
        .map(|s| {
            (0..m)
                .map(|_| if sat[s] { s } else { rng.random_range(0..n) })
                .collect()
        })
        .collect();
    TabularMdp::deterministic(&next, sat, rho).expect("generated tables are valid")
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteFailure {
    /// `mdp <index>` for generated MDPs, otherwise the fixture name.
    pub case: String,
    /// Discount of the value-iteration policy; `None` for fixed fixtures.
    pub gamma: Option<f64>,
    pub violation: OrderingViolation,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub mdps: usize,
    pub fixtures: usize,
    pub horizon: usize,
    pub r_sat: f64,
    pub gammas: Vec<f64>,
    pub failures: Vec<SuiteFailure>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Deterministic MDP with a fixed deterministic policy, checked as is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyFixture {
    pub name: String,
    /// Successor table `next[s][a]`.
    pub next: Vec<Vec<usize>>,
    pub sat: Vec<bool>,
    pub rho: Vec<f64>,
    /// Action `policy[t][s]` for every `t < horizon`.
    pub policy: Vec<Vec<usize>>,
}

impl PolicyFixture {
    pub fn build(&self, horizon: usize) -> Result<(TabularMdp, TabularPolicy), EvalError> {
        let mdp = TabularMdp::deterministic(&self.next, self.sat.clone(), self.rho.clone())?;
        let bad = |m: String| EvalError::Mdp(format!("fixture {}: {m}", self.name));
        if self.policy.len() != horizon {
            return Err(bad(format!(
                "policy has {} steps, horizon is {horizon}",
                self.policy.len()
            )));
        }
        for row in &self.policy {
            if row.len() != mdp.n_states() || row.iter().any(|&a| a >= mdp.n_actions()) {
                return Err(bad("policy rows need one valid action per state".into()));
            }
        }
        let policy = TabularPolicy::deterministic(&self.policy, mdp.n_actions());
        Ok((mdp, policy))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub seed: u64,
    pub mdps: usize,
    pub max_states: usize,
    pub max_actions: usize,
    pub horizon: usize,
    pub gammas: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub fixtures: Vec<PolicyFixture>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            mdps: 100,
            max_states: 12,
            max_actions: 3,
            horizon: 5,
            gammas: vec![0.9, 0.99],
            fixtures: Vec::new(),
        }
    }
}

/// Solves random MDPs exactly with `r_sat = choose_r_sat(-1, 1, H, 1)` and
/// checks the ordering of each greedy policy, then checks every fixture.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport, EvalError> {
    if cfg.horizon == 0 || cfg.max_states < 2 || cfg.max_actions == 0 {
        return Err(EvalError::Config(
            "suite needs horizon >= 1, max_states >= 2, max_actions >= 1".into(),
        ));
    }
    if cfg.gammas.iter().any(|g| !(0.0..=1.0).contains(g)) {
        return Err(EvalError::Config("discounts must lie in [0, 1]".into()));
    }
    let r_sat = crate::reward::choose_r_sat(-1.0, 1.0, cfg.horizon, 1.0)?;
    let mut rng = stream(cfg.seed, Stream::Mdp);
    let mut failures = Vec::new();
    for index in 0..cfg.mdps {
        let mdp = random_mdp(&mut rng, cfg.max_states, cfg.max_actions);
        for &gamma in &cfg.gammas {
            let sol = value_iteration(&mdp, r_sat, gamma, cfg.horizon)?;
            if let Some(violation) = check_asap_ordering(&mdp, &sol.policy, cfg.horizon)? {
                failures.push(SuiteFailure {
                    case: format!("mdp {index}"),
                    gamma: Some(gamma),
                    violation,
                });
            }
        }
    }
    for fx in &cfg.fixtures {
        let (mdp, policy) = fx.build(cfg.horizon)?;
        if let Some(violation) = check_asap_ordering(&mdp, &policy, cfg.horizon)? {
            failures.push(SuiteFailure {
                case: fx.name.clone(),
                gamma: None,
                violation,
            });
        }
    }
    Ok(SuiteReport {
        seed: cfg.seed,
        mdps: cfg.mdps,
        fixtures: cfg.fixtures.len(),
        horizon: cfg.horizon,
        r_sat,
        gammas: cfg.gammas.clone(),
        failures,
    })
}

/// Pair of padded traces whose discounted ASAP returns are misordered.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnViolation {
    pub earlier: Vec<f64>,
    pub later: Vec<f64>,
    pub g_earlier: f64,
    pub g_later: f64,
}

/// Enumerates every trace of length `k_max + 1` over the scalar `grid`
/// whose states stay satisfying once `phi` holds (padding after
/// satisfaction), scores each with the discounted ASAP reward, and checks
/// that satisfying strictly earlier always yields a strictly larger return.
pub fn check_return_ordering(
    phi: &Formula,
    grid: &[f64],
    k_max: usize,
    r_sat: f64,
    gamma: f64,
) -> Result<Option<ReturnViolation>, EvalError> {
    let sat_at = |x: f64| -> Result<bool, EvalError> {
        let tr = Trace::new(&[vec![x]])?;
        Ok(boolean_sat(&tr, 0, phi)?)
    };
    let mut sat_vals = Vec::new();
    let mut unsat_vals = Vec::new();
    for &x in grid {
        if sat_at(x)? {
            sat_vals.push(x);
        } else {
            unsat_vals.push(x);
        }
    }
    let len = k_max + 1;
    let count = (grid.len() as f64).powi(len as i32);
    if count > MAX_TRACES as f64 {
        return Err(EvalError::TooLarge {
            traces: count,
            limit: MAX_TRACES,
        });
    }
    // (t_phi, return, states)
    let mut scored: Vec<(Option<usize>, f64, Vec<f64>)> = Vec::new();
    let mut prefix = Vec::with_capacity(len);
    enumerate_padded(&unsat_vals, &sat_vals, len, &mut prefix, false, &mut |states| {
        scored.push((None, 0.0, states.to_vec()));
    });
    for (t_phi, g, states) in scored.iter_mut() {
        let rows: Vec<Vec<f64>> = states.iter().map(|&x| vec![x]).collect();
        let tr = Trace::new(&rows)?;
        let mut ret = 0.0;
        let mut disc = 1.0;
        for t in 0..len {
            if t_phi.is_none() && boolean_sat(&tr, t, phi)? {
                *t_phi = Some(t);
            }
            ret += disc * reward_asap(&tr, t, phi, r_sat)?;
            disc *= gamma;
        }
        *g = ret;
    }
    // For each satisfaction time keep the worst return; compare it against
    // the best return of every strictly later time.
    let key = |t: Option<usize>| t.unwrap_or(len);
    let mut worst: Vec<Option<usize>> = vec![None; len + 1];
    let mut best: Vec<Option<usize>> = vec![None; len + 1];
    for (i, (t, g, _)) in scored.iter().enumerate() {
        let k = key(*t);
        if worst[k].is_none_or(|j| *g < scored[j].1) {
            worst[k] = Some(i);
        }
        if best[k].is_none_or(|j| *g > scored[j].1) {
            best[k] = Some(i);
        }
    }
    for a in 0..len {
        let Some(wa) = worst[a] else { continue };
        for b in a + 1..=len {
            let Some(bb) = best[b] else { continue };
            if !(scored[wa].1 > scored[bb].1) {
                return Ok(Some(ReturnViolation {
                    earlier: scored[wa].2.clone(),
                    later: scored[bb].2.clone(),
                    g_earlier: scored[wa].1,
                    g_later: scored[bb].1,
                }));
            }
        }
    }
    Ok(None)
}

fn enumerate_padded<F: FnMut(&[f64])>(
    unsat: &[f64],
    sat: &[f64],
    len: usize,
    prefix: &mut Vec<f64>,
    satisfied: bool,
    emit: &mut F,
) {
    if prefix.len() == len {
        emit(prefix);
        return;
    }
    for &x in sat {
        prefix.push(x);
        enumerate_padded(unsat, sat, len, prefix, true, emit);
        prefix.pop();
    }
    if !satisfied {
        for &x in unsat {
            prefix.push(x);
            enumerate_padded(unsat, sat, len, prefix, false, emit);
            prefix.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::parse_formula;

    /// 0 -a0-> 1 (sat) ; 0 -a1-> 2 -> 3 -> 4 (sat).
    fn two_path() -> TabularMdp {
        let next = vec![vec![1, 2], vec![1, 1], vec![3, 3], vec![4, 4], vec![4, 4]];
        let sat = vec![false, true, false, false, true];
        TabularMdp::deterministic(&next, sat, vec![-0.5, 0.0, -0.2, -0.1, 0.0]).unwrap()
    }

    #[test]
    fn absorbing_satisfying_state_geometric_value() {
        let mdp = TabularMdp::deterministic(&[vec![0]], vec![true], vec![0.0]).unwrap();
        let sol = value_iteration(&mdp, 62.0, 0.9, 200).unwrap();
        assert!((sol.v[0][0] - 62.0 / (1.0 - 0.9)).abs() < 1e-6);
    }

    #[test]
    fn unsatisfying_chain_geometric_value() {
        let next = vec![vec![1], vec![2], vec![0]];
        let mdp = TabularMdp::deterministic(&next, vec![false; 3], vec![-1.0; 3]).unwrap();
        for h in [1, 5, 17] {
            let sol = value_iteration(&mdp, 62.0, 0.9, h).unwrap();
            let want = -(1.0 - 0.9f64.powi(h as i32)) / (1.0 - 0.9);
            for s in 0..3 {
                assert!((sol.v[0][s] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn optimal_policy_takes_short_path() {
        let mdp = two_path();
        let sol = value_iteration(&mdp, 12.0, 0.9, 5).unwrap();
        assert_eq!(sol.policy.probs[0][0], vec![1.0, 0.0]);
        assert_eq!(check_asap_ordering(&mdp, &sol.policy, 5).unwrap(), None);
    }

    #[test]
    fn anti_asap_policy_yields_counterexample() {
        let mdp = two_path();
        let long = TabularPolicy::constant(1, 5, 2, 5);
        let v = check_asap_ordering(&mdp, &long, 5).unwrap().expect("violation");
        assert_eq!(v.earlier, vec![0, 1, 1, 1, 1]);
        assert_eq!(v.later, vec![0, 2, 3, 4, 4]);
        assert_eq!((v.t_earlier, v.t_later), (1, Some(3)));
        assert_eq!((v.p_earlier, v.p_later), (0.0, 1.0));
    }

    #[test]
    fn never_satisfying_mdp_passes_vacuously() {
        let next = vec![vec![1, 0], vec![0, 1]];
        let mdp = TabularMdp::deterministic(&next, vec![false; 2], vec![-0.3, -0.7]).unwrap();
        let sol = value_iteration(&mdp, 12.0, 0.9, 4).unwrap();
        assert_eq!(check_asap_ordering(&mdp, &sol.policy, 4).unwrap(), None);
        let any = TabularPolicy::constant(1, 2, 2, 4);
        assert_eq!(check_asap_ordering(&mdp, &any, 4).unwrap(), None);
    }

    #[test]
    fn stochastic_ties_are_not_asap() {
        // Uniform over both paths: equal probabilities violate strictness.
        let mdp = two_path();
        let mut pol = TabularPolicy::constant(0, 5, 2, 5);
        pol.probs[0][0] = vec![0.5, 0.5];
        let v = check_asap_ordering(&mdp, &pol, 5).unwrap().expect("violation");
        assert_eq!(v.p_earlier, v.p_later);
    }

    #[test]
    fn invalid_tables_rejected() {
        let bad = TabularMdp {
            p: vec![
                vec![vec![0.5, 0.4], vec![1.0, 0.0]],
                vec![vec![0.0, 1.0], vec![0.0, 1.0]],
            ],
            sat: vec![false, true],
            rho: vec![-1.0, 0.0],
        };
        assert!(bad.validate().is_err());
        assert!(TabularMdp::deterministic(&[vec![0]], vec![true, false], vec![0.0]).is_err());
    }

    #[test]
    fn too_many_traces_refused() {
        let n = 40;
        let next: Vec<Vec<usize>> = (0..n).map(|s| vec![(s + 1) % n]).collect();
        let mdp = TabularMdp::deterministic(&next, vec![false; n], vec![-0.5; n]).unwrap();
        let pol = TabularPolicy::constant(0, n, 1, 6);
        assert!(matches!(
            check_asap_ordering(&mdp, &pol, 6),
            Err(EvalError::TooLarge { .. })
        ));
    }

    #[test]
    fn return_ordering_holds_for_default_r_sat() {
        let phi = parse_formula("x0 <= 0", 1).unwrap();
        let grid = [-1.0, -0.5, 0.0, 0.25, 0.5, 1.0];
        let r_sat = crate::reward::choose_r_sat(-1.0, 1.0, 5, 1.0).unwrap();
        for gamma in [0.9, 0.99] {
            assert_eq!(check_return_ordering(&phi, &grid, 5, r_sat, gamma).unwrap(), None);
        }
    }

    #[test]
    fn return_ordering_fails_for_tiny_r_sat() {
        let phi = parse_formula("x0 <= 0", 1).unwrap();
        // Lingering just outside the set can beat a fast but poor approach.
        let grid = [-1.0, 0.0, 0.01, 1.0];
        let v = check_return_ordering(&phi, &grid, 5, 0.5, 0.99)
            .unwrap()
            .expect("violation");
        assert!(v.g_earlier <= v.g_later);
    }

    #[test]
    fn anti_asap_fixture_fails_suite() {
        let fx = PolicyFixture {
            name: "long way round".into(),
            next: vec![vec![1, 2], vec![1, 1], vec![3, 3], vec![4, 4], vec![4, 4]],
            sat: vec![false, true, false, false, true],
            rho: vec![-0.5, 0.0, -0.2, -0.1, 0.0],
            policy: vec![vec![1; 5]; 5],
        };
        let cfg = SuiteConfig {
            mdps: 3,
            fixtures: vec![fx.clone()],
            ..SuiteConfig::default()
        };
        let rep = run_suite(&cfg).unwrap();
        assert_eq!(rep.failures.len(), 1);
        assert_eq!(rep.failures[0].case, "long way round");
        assert_eq!(rep.failures[0].violation.earlier, vec![0, 1, 1, 1, 1]);
        let mut short = fx;
        short.policy = vec![vec![0; 5]; 5];
        assert!(run_suite(&SuiteConfig {
            mdps: 0,
            fixtures: vec![short.clone()],
            ..cfg.clone()
        })
        .unwrap()
        .passed());
        short.policy.pop();
        assert!(run_suite(&SuiteConfig {
            mdps: 0,
            fixtures: vec![short],
            ..cfg
        })
        .is_err());
    }

    #[test]
    fn suite_is_reproducible() {
        let cfg = SuiteConfig {
            mdps: 10,
            ..SuiteConfig::default()
        };
        let a = run_suite(&cfg).unwrap();
        let b = run_suite(&cfg).unwrap();
        assert!(a.passed());
        assert_eq!(a.r_sat, 12.0);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
