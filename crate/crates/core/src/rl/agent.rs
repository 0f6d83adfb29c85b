use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{AgentConfig, Algo, Batch, EntropyMode, Policy, RlError};
use crate::nn::{Activation, Adam, ForwardCache, Mlp};

const LOG_STD_MIN: f64 = -20.0;
const LOG_STD_MAX: f64 = 2.0;
const HALF_LOG_2PI: f64 = 0.918_938_533_204_672_7;

/// Losses and temperature of one gradient update.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct UpdateStats {
    pub critic_loss: f64,
    /// `None` on TD3 steps that skip the delayed actor update.
    pub actor_loss: Option<f64>,
    pub alpha: f64,
    /// Mean `-log pi` of the sampled actions (SAC only).
    pub entropy: Option<f64>,
}

#[derive(Debug, Clone, Default)]
struct Work {
    actor: ForwardCache,
    actor_next: ForwardCache,
    critic: Vec<ForwardCache>,
    critic_pi: Vec<ForwardCache>,
    target: Vec<ForwardCache>,
    input: Vec<f64>,
    input_pi: Vec<f64>,
    actor_grads: Vec<f64>,
    critic_grads: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Agent {
    cfg: AgentConfig,
    state_dim: usize,
    action_dim: usize,
    action_low: Vec<f64>,
    action_high: Vec<f64>,
    actor: Mlp,
    actor_target: Option<Mlp>,
    critics: Vec<Mlp>,
    critic_targets: Vec<Mlp>,
    actor_opt: Adam,
    critic_opts: Vec<Adam>,
    log_alpha: f64,
    alpha_opt: Option<Adam>,
    updates: u64,
    #[serde(skip)]
    work: Work,
}

/// `log(1 - tanh(u)^2)` without cancellation.
fn log_one_minus_tanh_sq(u: f64) -> f64 {
    let x = -2.0 * u;
    let softplus = x.max(0.0) + (-x.abs()).exp().ln_1p();
    2.0 * (std::f64::consts::LN_2 - u - softplus)
}

/// SAC policy sample for a batch: `a = tanh(mu + sigma * eps)`.
struct Squashed {
    a: Vec<f64>,
    sigma: Vec<f64>,
    /// 1 where log_std was inside its clamp range, else 0.
    live: Vec<f64>,
    logp: Vec<f64>,
}

fn standard_normals<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Squashes actor outputs `[mu, log_std]` (one row of `2m` per sample).
fn squash(out: &[f64], m: usize, eps: &[f64]) -> Squashed {
    let b = out.len() / (2 * m);
    let mut s = Squashed {
        a: Vec::with_capacity(b * m),
        sigma: Vec::with_capacity(b * m),
        live: Vec::with_capacity(b * m),
        logp: Vec::with_capacity(b),
    };
    for (i, row) in out.chunks_exact(2 * m).enumerate() {
        let mut logp = 0.0;
        for j in 0..m {
            let raw = row[m + j];
            let ls = raw.clamp(LOG_STD_MIN, LOG_STD_MAX);
            let sigma = ls.exp();
            let e = eps[i * m + j];
            let u = row[j] + sigma * e;
            logp += -0.5 * e * e - ls - HALF_LOG_2PI - log_one_minus_tanh_sq(u);
            s.a.push(u.tanh());
            s.sigma.push(sigma);
            s.live.push(if (LOG_STD_MIN..=LOG_STD_MAX).contains(&raw) {
                1.0
            } else {
                0.0
            });
        }
        s.logp.push(logp);
    }
    s
}

/// SAC actor loss `mean(alpha * log pi(a|s) - min_k Q_k(s, a))` for the
/// reparameterized sample fixed by `eps`, and its gradient with respect to
/// the actor parameters.
fn sac_actor_objective(
    actor: &Mlp,
    critics: &[Mlp],
    s: &[f64],
    b: usize,
    eps: &[f64],
    alpha: f64,
) -> Result<(f64, Vec<f64>), RlError> {
    let sd = actor.input_dim();
    let ad = actor.output_dim() / 2;
    let bf = b as f64;
    let mut cache = ForwardCache::default();
    actor.forward(s, b, &mut cache)?;
    let pi = squash(cache.output(), ad, eps);
    let mut input = Vec::with_capacity(b * (sd + ad));
    for i in 0..b {
        input.extend_from_slice(&s[i * sd..(i + 1) * sd]);
        input.extend_from_slice(&pi.a[i * ad..(i + 1) * ad]);
    }
    let mut caches = vec![ForwardCache::default(); critics.len()];
    let mut q_min = vec![f64::INFINITY; b];
    let mut which = vec![0usize; b];
    for (k, critic) in critics.iter().enumerate() {
        critic.forward(&input, b, &mut caches[k])?;
        for (i, q) in caches[k].output().iter().enumerate() {
            if *q < q_min[i] {
                q_min[i] = *q;
                which[i] = k;
            }
        }
    }
    let loss = (0..b).map(|i| alpha * pi.logp[i] - q_min[i]).sum::<f64>() / bf;
    let mut dq_da = vec![0.0; b * ad];
    for (k, critic) in critics.iter().enumerate() {
        let dy: Vec<f64> = which.iter().map(|&w| if w == k { 1.0 } else { 0.0 }).collect();
        if dy.iter().all(|&v| v == 0.0) {
            continue;
        }
        let dx = critic.backward(&caches[k], &dy, None)?;
        for (i, row) in dx.chunks_exact(sd + ad).enumerate() {
            for j in 0..ad {
                dq_da[i * ad + j] += row[sd + j];
            }
        }
    }
    // d/du log(1 - tanh(u)^2) = -2 tanh(u); u = mu + sigma * eps and
    // d sigma / d log_std = sigma.
    let mut d_out = vec![0.0; b * 2 * ad];
    for i in 0..b {
        for j in 0..ad {
            let k = i * ad + j;
            let a = pi.a[k];
            let jac = 1.0 - a * a;
            let se = pi.sigma[k] * eps[k];
            d_out[i * 2 * ad + j] = (alpha * 2.0 * a - dq_da[k] * jac) / bf;
            d_out[i * 2 * ad + ad + j] = pi.live[k] * (alpha * (-1.0 + 2.0 * a * se) - dq_da[k] * jac * se) / bf;
        }
    }
    let mut grads = vec![0.0; actor.num_params()];
    actor.backward(&cache, &d_out, Some(grads.as_mut_slice()))?;
    Ok((loss, grads))
}

impl Agent {
    pub fn new<R: Rng + ?Sized>(
        cfg: AgentConfig,
        state_dim: usize,
        action_low: Vec<f64>,
        action_high: Vec<f64>,
        rng: &mut R,
    ) -> Result<Self, RlError> {
        cfg.validate()?;
        let action_dim = action_low.len();
        if action_dim == 0 || action_high.len() != action_dim || state_dim == 0 {
            return Err(RlError::Dimension(
                "state and action dimensions must be positive and bounds consistent".into(),
            ));
        }
        if action_low.iter().zip(&action_high).any(|(l, h)| !(l < h)) {
            return Err(RlError::Config("action bounds must satisfy low < high".into()));
        }
        let hidden = cfg.hidden();
        let lr = cfg.lr();
        let sizes = |inp: usize, out: usize| {
            let mut v = vec![inp];
            v.extend(&hidden);
            v.push(out);
            v
        };
        let (actor, n_critics) = match cfg.algo {
            Algo::Ddpg => (
                Mlp::with_rng(&sizes(state_dim, action_dim), Activation::Relu, Activation::Tanh, rng)?,
                1,
            ),
            Algo::Td3 => (
                Mlp::with_rng(&sizes(state_dim, action_dim), Activation::Relu, Activation::Tanh, rng)?,
                2,
            ),
            Algo::Sac => (
                Mlp::with_rng(
                    &sizes(state_dim, 2 * action_dim),
                    Activation::Relu,
                    Activation::Identity,
                    rng,
                )?,
                2,
            ),
        };
        let mut critics = Vec::new();
        for _ in 0..n_critics {
            critics.push(Mlp::with_rng(
                &sizes(state_dim + action_dim, 1),
                Activation::Relu,
                Activation::Identity,
                rng,
            )?);
        }
        let actor_target = (cfg.algo != Algo::Sac).then(|| actor.clone());
        let alpha_opt = (cfg.algo == Algo::Sac && cfg.entropy == EntropyMode::Auto).then(|| Adam::new(1, lr));
        let log_alpha = if cfg.algo == Algo::Sac && cfg.alpha > 0.0 {
            cfg.alpha.ln()
        } else {
            // exp(f64::MIN) is exactly 0 and, unlike -inf, survives JSON.
            f64::MIN
        };
        Ok(Self {
            state_dim,
            action_dim,
            action_low,
            action_high,
            actor_opt: Adam::new(actor.num_params(), lr),
            critic_opts: critics.iter().map(|c| Adam::new(c.num_params(), lr)).collect(),
            critic_targets: critics.clone(),
            actor_target,
            actor,
            critics,
            log_alpha,
            alpha_opt,
            updates: 0,
            work: Work::default(),
            cfg,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn alpha(&self) -> f64 {
        if self.cfg.algo == Algo::Sac {
            self.log_alpha.exp()
        } else {
            0.0
        }
    }

    pub fn actor(&self) -> &Mlp {
        &self.actor
    }

    pub fn critics(&self) -> &[Mlp] {
        &self.critics
    }

    pub fn critic_targets(&self) -> &[Mlp] {
        &self.critic_targets
    }

    /// Maps a normalized action in `[-1, 1]^m` to the action box.
    pub fn scale_action(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter()
            .zip(self.action_low.iter().zip(&self.action_high))
            .map(|(u, (lo, hi))| lo + 0.5 * (u.clamp(-1.0, 1.0) + 1.0) * (hi - lo))
            .collect()
    }

    /// Uniform random normalized action (warmup).
    pub fn random_unit_action<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.action_dim).map(|_| rng.random_range(-1.0..=1.0)).collect()
    }

    /// Normalized action for state `s`. With `explore`, DDPG/TD3 add Gaussian
    /// noise and SAC samples its squashed Gaussian; otherwise the action is
    /// deterministic.
    pub fn select_unit_action<R: Rng + ?Sized>(
        &self,
        s: &[f64],
        explore: bool,
        rng: &mut R,
    ) -> Result<Vec<f64>, RlError> {
        if !explore {
            return self.greedy_unit_action(s);
        }
        let out = self.actor_output(s)?;
        let m = self.action_dim;
        Ok(match self.cfg.algo {
            Algo::Ddpg | Algo::Td3 => out
                .iter()
                .map(|mu| {
                    let n: f64 = StandardNormal.sample(rng);
                    (mu + self.cfg.exploration_noise * n).clamp(-1.0, 1.0)
                })
                .collect(),
            Algo::Sac => (0..m)
                .map(|j| {
                    let sigma = out[m + j].clamp(LOG_STD_MIN, LOG_STD_MAX).exp();
                    let n: f64 = StandardNormal.sample(rng);
                    (out[j] + sigma * n).tanh()
                })
                .collect(),
        })
    }

    /// Deterministic normalized action: `mu(s)` for DDPG/TD3, `tanh(mu(s))` for SAC.
    pub fn greedy_unit_action(&self, s: &[f64]) -> Result<Vec<f64>, RlError> {
        let out = self.actor_output(s)?;
        Ok(match self.cfg.algo {
            Algo::Ddpg | Algo::Td3 => out,
            Algo::Sac => out[..self.action_dim].iter().map(|mu| mu.tanh()).collect(),
        })
    }

    fn actor_output(&self, s: &[f64]) -> Result<Vec<f64>, RlError> {
        if s.len() != self.state_dim {
            return Err(RlError::Dimension(format!(
                "state has length {}, expected {}",
                s.len(),
                self.state_dim
            )));
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(RlError::NonFinite("state".into()));
        }
        let out = self.actor.predict(s)?;
        if out.iter().any(|v| !v.is_finite()) {
            return Err(RlError::NonFinite("actor output".into()));
        }
        Ok(out)
    }

    /// Action in environment units; see [`Agent::select_unit_action`].
    pub fn select_action<R: Rng + ?Sized>(&self, s: &[f64], explore: bool, rng: &mut R) -> Result<Vec<f64>, RlError> {
        Ok(self.scale_action(&self.select_unit_action(s, explore, rng)?))
    }

    /// True when every network parameter is finite.
    pub fn params_finite(&self) -> bool {
        let nets = std::iter::once(&self.actor)
            .chain(self.actor_target.iter())
            .chain(self.critics.iter())
            .chain(self.critic_targets.iter());
        nets.into_iter().all(|n| n.params().iter().all(|p| p.is_finite()))
    }

    /// One gradient step on `batch` (actions normalized).
    pub fn update<R: Rng + ?Sized>(&mut self, batch: &Batch, rng: &mut R) -> Result<UpdateStats, RlError> {
        let b = batch.len;
        if b == 0 {
            return Err(RlError::Underfull { wanted: 1, have: 0 });
        }
        if batch.s.len() != b * self.state_dim
            || batch.s_next.len() != b * self.state_dim
            || batch.a.len() != b * self.action_dim
            || batch.r.len() != b
            || batch.done.len() != b
        {
            return Err(RlError::Dimension("batch arrays do not match agent dimensions".into()));
        }
        let n = self.critics.len();
        self.work.critic.resize_with(n, ForwardCache::default);
        self.work.critic_pi.resize_with(n, ForwardCache::default);
        self.work.target.resize_with(n, ForwardCache::default);
        let stats = match self.cfg.algo {
            Algo::Ddpg | Algo::Td3 => self.update_deterministic(batch, rng)?,
            Algo::Sac => self.update_sac(batch, rng)?,
        };
        self.updates += 1;
        if !stats.critic_loss.is_finite() || stats.actor_loss.is_some_and(|l| !l.is_finite()) {
            return Err(RlError::NonFinite(format!(
                "losses after update {}: critic {}, actor {:?}, alpha {}",
                self.updates, stats.critic_loss, stats.actor_loss, stats.alpha
            )));
        }
        Ok(stats)
    }

    fn concat(&self, s: &[f64], a: &[f64], b: usize, out: &mut Vec<f64>) {
        let (sd, ad) = (self.state_dim, self.action_dim);
        out.clear();
        for i in 0..b {
            out.extend_from_slice(&s[i * sd..(i + 1) * sd]);
            out.extend_from_slice(&a[i * ad..(i + 1) * ad]);
        }
    }

    /// Regresses every critic onto `y`; returns the mean of their MSE losses.
    fn fit_critics(&mut self, batch: &Batch, y: &[f64]) -> Result<f64, RlError> {
        let b = batch.len;
        let mut input = std::mem::take(&mut self.work.input);
        self.concat(&batch.s, &batch.a, b, &mut input);
        let mut total = 0.0;
        for k in 0..self.critics.len() {
            let cache = &mut self.work.critic[k];
            self.critics[k].forward(&input, b, cache)?;
            let q = cache.output();
            let mut loss = 0.0;
            let dq: Vec<f64> = q
                .iter()
                .zip(y)
                .map(|(q, y)| {
                    let e = q - y;
                    loss += e * e;
                    2.0 * e / b as f64
                })
                .collect();
            total += loss / b as f64;
            let grads = &mut self.work.critic_grads;
            grads.clear();
            grads.resize(self.critics[k].num_params(), 0.0);
            self.critics[k].backward(cache, &dq, Some(grads.as_mut_slice()))?;
            self.critic_opts[k].step(self.critics[k].params_mut(), grads)?;
        }
        self.work.input = input;
        Ok(total / self.critics.len() as f64)
    }

    fn update_deterministic<R: Rng + ?Sized>(&mut self, batch: &Batch, rng: &mut R) -> Result<UpdateStats, RlError> {
        let b = batch.len;
        let (sd, ad) = (self.state_dim, self.action_dim);
        let gamma = self.cfg.gamma;
        let scale = self.cfg.reward_scale;
        let td3 = self.cfg.algo == Algo::Td3;

        // Critic targets.
        let actor_target = self
            .actor_target
            .as_ref()
            .expect("deterministic agents keep an actor target");
        actor_target.forward(&batch.s_next, b, &mut self.work.actor_next)?;
        let mut a_next = self.work.actor_next.output().to_vec();
        if td3 {
            for v in a_next.iter_mut() {
                let n: f64 = StandardNormal.sample(rng);
                let noise = (self.cfg.target_noise * n).clamp(-self.cfg.noise_clip, self.cfg.noise_clip);
                *v = (*v + noise).clamp(-1.0, 1.0);
            }
        }
        let mut input = std::mem::take(&mut self.work.input_pi);
        self.concat(&batch.s_next, &a_next, b, &mut input);
        let mut q_next = vec![f64::INFINITY; b];
        for (k, target) in self.critic_targets.iter().enumerate() {
            target.forward(&input, b, &mut self.work.target[k])?;
            for (m, q) in q_next.iter_mut().zip(self.work.target[k].output()) {
                *m = m.min(*q);
            }
        }
        let y: Vec<f64> = (0..b)
            .map(|i| scale * batch.r[i] + gamma * (1.0 - batch.done[i]) * q_next[i])
            .collect();
        self.work.input_pi = input;
        let critic_loss = self.fit_critics(batch, &y)?;

        let actor_due = !td3 || (self.updates + 1).is_multiple_of(self.cfg.policy_delay as u64);
        let mut actor_loss = None;
        if actor_due {
            // Actor ascends Q1(s, mu(s)).
            self.actor.forward(&batch.s, b, &mut self.work.actor)?;
            let mu = self.work.actor.output().to_vec();
            let mut input = std::mem::take(&mut self.work.input_pi);
            self.concat(&batch.s, &mu, b, &mut input);
            self.critics[0].forward(&input, b, &mut self.work.critic_pi[0])?;
            let q = self.work.critic_pi[0].output();
            actor_loss = Some(-q.iter().sum::<f64>() / b as f64);
            let dy = vec![-1.0 / b as f64; b];
            let dx = self.critics[0].backward(&self.work.critic_pi[0], &dy, None)?;
            let mut da = Vec::with_capacity(b * ad);
            for row in dx.chunks_exact(sd + ad) {
                da.extend_from_slice(&row[sd..]);
            }
            self.work.input_pi = input;
            let grads = &mut self.work.actor_grads;
            grads.clear();
            grads.resize(self.actor.num_params(), 0.0);
            self.actor.backward(&self.work.actor, &da, Some(grads.as_mut_slice()))?;
            self.actor_opt.step(self.actor.params_mut(), grads)?;

            let tau = self.cfg.tau;
            if let Some(t) = self.actor_target.as_mut() {
                t.soft_update_from(&self.actor, tau);
            }
            for (t, c) in self.critic_targets.iter_mut().zip(&self.critics) {
                t.soft_update_from(c, tau);
            }
        }
        Ok(UpdateStats {
            critic_loss,
            actor_loss,
            alpha: 0.0,
            entropy: None,
        })
    }

    fn update_sac<R: Rng + ?Sized>(&mut self, batch: &Batch, rng: &mut R) -> Result<UpdateStats, RlError> {
        let b = batch.len;
        let bf = b as f64;
        let ad = self.action_dim;
        let gamma = self.cfg.gamma;
        let scale = self.cfg.reward_scale;

        // One policy sample on the current states serves the temperature and
        // actor updates.
        let eps_pi = standard_normals(b * ad, rng);
        let eps_next = standard_normals(b * ad, rng);
        self.actor.forward(&batch.s, b, &mut self.work.actor)?;
        let pi = squash(self.work.actor.output(), ad, &eps_pi);
        let alpha = self.log_alpha.exp();
        if let Some(opt) = self.alpha_opt.as_mut() {
            let target = self.cfg.target_entropy.unwrap_or(-(ad as f64));
            let g = -pi.logp.iter().map(|lp| lp + target).sum::<f64>() / bf;
            let mut p = [self.log_alpha];
            opt.step(&mut p, &[g])?;
            self.log_alpha = p[0];
        }

        // Entropy-regularized critic targets.
        self.actor.forward(&batch.s_next, b, &mut self.work.actor_next)?;
        let next = squash(self.work.actor_next.output(), ad, &eps_next);
        let mut input = std::mem::take(&mut self.work.input_pi);
        self.concat(&batch.s_next, &next.a, b, &mut input);
        let mut q_next = vec![f64::INFINITY; b];
        for (k, target) in self.critic_targets.iter().enumerate() {
            target.forward(&input, b, &mut self.work.target[k])?;
            for (m, q) in q_next.iter_mut().zip(self.work.target[k].output()) {
                *m = m.min(*q);
            }
        }
        self.work.input_pi = input;
        let y: Vec<f64> = (0..b)
            .map(|i| scale * batch.r[i] + gamma * (1.0 - batch.done[i]) * (q_next[i] - alpha * next.logp[i]))
            .collect();
        let critic_loss = self.fit_critics(batch, &y)?;

        let (actor_loss, grads) = sac_actor_objective(&self.actor, &self.critics, &batch.s, b, &eps_pi, alpha)?;
        self.actor_opt.step(self.actor.params_mut(), &grads)?;

        let tau = self.cfg.tau;
        for (t, c) in self.critic_targets.iter_mut().zip(&self.critics) {
            t.soft_update_from(c, tau);
        }
        let entropy = -pi.logp.iter().sum::<f64>() / bf;
        Ok(UpdateStats {
            critic_loss,
            actor_loss: Some(actor_loss),
            alpha,
            entropy: Some(entropy),
        })
    }

    /// Q estimate of the first critic at `(s, unit action)`.
    pub fn q_value(&self, s: &[f64], unit_action: &[f64]) -> Result<f64, RlError> {
        let mut x = s.to_vec();
        x.extend_from_slice(unit_action);
        Ok(self.critics[0].predict(&x)?[0])
    }

    pub fn to_json(&self) -> Result<String, RlError> {
        serde_json::to_string(self).map_err(|e| RlError::Nn(e.into()))
    }

    pub fn from_json(text: &str) -> Result<Self, RlError> {
        let agent: Agent = serde_json::from_str(text).map_err(|e| RlError::Nn(e.into()))?;
        agent.cfg.validate()?;
        if !agent.params_finite() {
            return Err(RlError::NonFinite("checkpoint parameters".into()));
        }
        Ok(agent)
    }
}

impl Policy for Agent {
    fn action(&self, s: &[f64]) -> Result<Vec<f64>, RlError> {
        Ok(self.scale_action(&self.greedy_unit_action(s)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stable_log_one_minus_tanh_sq() {
        for u in [-30.0, -3.0, -0.2, 0.0, 0.7, 4.0, 30.0] {
            let direct = (1.0 - f64::tanh(u).powi(2)).ln();
            let stable = log_one_minus_tanh_sq(u);
            if u.abs() < 5.0 {
                assert!((direct - stable).abs() < 1e-12, "{u}");
            }
            assert!(stable.is_finite());
        }
    }

    #[test]
    fn sac_actor_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (sd, ad, b) = (3, 2, 5);
        let actor = Mlp::with_rng(&[sd, 8, 2 * ad], Activation::Tanh, Activation::Identity, &mut rng).unwrap();
        let critics: Vec<Mlp> = (0..2)
            .map(|_| Mlp::with_rng(&[sd + ad, 8, 1], Activation::Tanh, Activation::Identity, &mut rng).unwrap())
            .collect();
        let s: Vec<f64> = (0..b * sd).map(|_| rng.random_range(-1.0..1.0)).collect();
        let eps = standard_normals(b * ad, &mut rng);
        let alpha = 0.3;
        let (_, grads) = sac_actor_objective(&actor, &critics, &s, b, &eps, alpha).unwrap();
        let h = 1e-6;
        let mut probe = actor.clone();
        let mut worst: f64 = 0.0;
        for i in 0..actor.num_params() {
            let p = actor.params()[i];
            probe.params_mut()[i] = p + h;
            let up = sac_actor_objective(&probe, &critics, &s, b, &eps, alpha).unwrap().0;
            probe.params_mut()[i] = p - h;
            let down = sac_actor_objective(&probe, &critics, &s, b, &eps, alpha).unwrap().0;
            probe.params_mut()[i] = p;
            let num = (up - down) / (2.0 * h);
            worst = worst.max((grads[i] - num).abs() / grads[i].abs().max(num.abs()).max(1e-4));
        }
        assert!(worst < 1e-5, "relative error {worst}");
    }

    #[test]
    fn squash_log_prob_matches_density() {
        // One dimension: log N(u; mu, sigma) - log(1 - tanh(u)^2).
        let out = [0.3, -0.5];
        let eps = [0.8];
        let sq = squash(&out, 1, &eps);
        let sigma = (-0.5f64).exp();
        let u = 0.3 + sigma * 0.8;
        let normal = -0.5 * 0.8f64 * 0.8 - sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
        let expected = normal - (1.0 - u.tanh().powi(2)).ln();
        assert!((sq.logp[0] - expected).abs() < 1e-12);
        assert_eq!(sq.a[0], u.tanh());
    }
}
