//! Clipped-surrogate PPO loss with hand-written gradients, and Adam.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use soccer_core::ConfigError;

use crate::net::{ActorCritic, Workspace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_epsilon: f64,
    pub epochs_per_update: usize,
    pub minibatch_size: usize,
    /// Transitions gathered per update, split evenly across `n_envs`.
    pub rollout_length: usize,
    pub n_envs: usize,
    pub learning_rate: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    /// Global gradient-norm clip.
    pub max_grad_norm: f64,
    pub hidden: Vec<usize>,
    pub total_steps: u64,
    pub seed: u64,
    /// Stop once the goal rate over the last 100 finished episodes reaches
    /// this value.
    pub stop_at_goal_rate: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_epsilon: 0.2,
            epochs_per_update: 4,
            minibatch_size: 256,
            rollout_length: 2048,
            n_envs: 16,
            learning_rate: 3e-4,
            entropy_coef: 0.01,
            value_coef: 0.5,
            max_grad_norm: 0.5,
            hidden: vec![64, 64],
            total_steps: 1_000_000,
            seed: 0,
            stop_at_goal_rate: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(ConfigError::invalid("gamma", "must be in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(ConfigError::invalid("gae_lambda", "must be in [0, 1]"));
        }
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 1.0) {
            return Err(ConfigError::invalid("clip_epsilon", "must be in (0, 1)"));
        }
        for (key, v) in [
            ("epochs_per_update", self.epochs_per_update),
            ("minibatch_size", self.minibatch_size),
            ("rollout_length", self.rollout_length),
            ("n_envs", self.n_envs),
        ] {
            if v == 0 {
                return Err(ConfigError::invalid(key, "must be >= 1"));
            }
        }
        if self.rollout_length % self.n_envs != 0 {
            return Err(ConfigError::invalid("rollout_length", "must be a multiple of n_envs"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(ConfigError::invalid("learning_rate", "must be finite and > 0"));
        }
        for (key, v) in [
            ("entropy_coef", self.entropy_coef),
            ("value_coef", self.value_coef),
            ("max_grad_norm", self.max_grad_norm),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ConfigError::invalid(key, "must be finite and >= 0"));
            }
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(ConfigError::invalid("hidden", "needs at least one non-empty layer"));
        }
        if let Some(r) = self.stop_at_goal_rate {
            if !(0.0..=1.0).contains(&r) {
                return Err(ConfigError::invalid("stop_at_goal_rate", "must be in [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Flattened transitions of one update.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Batch {
    pub obs_dim: usize,
    pub act_dim: usize,
    pub obs: Vec<f64>,
    /// Raw (unclipped) sampled actions.
    pub actions: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.log_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_probs.is_empty()
    }

    pub fn obs(&self, i: usize) -> &[f64] {
        &self.obs[i * self.obs_dim..(i + 1) * self.obs_dim]
    }

    pub fn action(&self, i: usize) -> &[f64] {
        &self.actions[i * self.act_dim..(i + 1) * self.act_dim]
    }

    /// Rescales advantages to mean 0 and standard deviation 1.
    pub fn normalize_advantages(&mut self) {
        let n = self.advantages.len() as f64;
        if n == 0.0 {
            return;
        }
        let mean = self.advantages.iter().sum::<f64>() / n;
        let var = self.advantages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt() + 1e-8;
        for a in &mut self.advantages {
            *a = (*a - mean) / std;
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct LossStats {
    /// Total loss that is minimized.
    pub loss: f64,
    /// Mean clipped surrogate (maximized).
    pub surrogate: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

/// `min(ratio·A, clip(ratio, 1 ± ε)·A)` and whether the unclipped term is the
/// one selected (and so carries gradient).
pub fn clipped_surrogate(ratio: f64, adv: f64, eps: f64) -> (f64, bool) {
    let unclipped = ratio * adv;
    let clipped = ratio.clamp(1.0 - eps, 1.0 + eps) * adv;
    if unclipped <= clipped {
        (unclipped, true)
    } else {
        (clipped, false)
    }
}

/// Loss `−surrogate + c_v·½(V − R)² − c_e·entropy`, averaged over `idx`,
/// with its gradient added into `grads` (which must be zeroed by the caller).
pub fn loss_and_grad(
    net: &ActorCritic,
    batch: &Batch,
    idx: &[usize],
    config: &TrainConfig,
    ws: &mut Workspace,
    grads: &mut [f64],
) -> LossStats {
    let m = idx.len() as f64;
    let eps = config.clip_epsilon;
    let log_std = net.log_std().to_vec();
    let inv_var: Vec<f64> = log_std.iter().map(|s| (-2.0 * s).exp()).collect();
    let ls = net.log_std_range();
    let mut mean = Vec::with_capacity(net.act_dim);
    let mut dmean = vec![0.0; net.act_dim];
    let mut stats = LossStats::default();
    let mut dlog_std = vec![0.0; net.act_dim];

    for &i in idx {
        let obs = batch.obs(i);
        let act = batch.action(i);
        let adv = batch.advantages[i];

        net.mean(obs, ws, &mut mean);
        let logp = net.log_prob(&mean, act);
        let log_ratio = logp - batch.log_probs[i];
        let ratio = log_ratio.exp();
        let (surr, active) = clipped_surrogate(ratio, adv, eps);
        stats.surrogate += surr / m;
        stats.approx_kl += ((ratio - 1.0) - log_ratio) / m;
        if (ratio - 1.0).abs() > eps {
            stats.clip_fraction += 1.0 / m;
        }
        // d(−surr)/d(logp)
        let g_logp = if active { -adv * ratio / m } else { 0.0 };
        if g_logp != 0.0 {
            for k in 0..net.act_dim {
                let diff = act[k] - mean[k];
                dmean[k] = g_logp * diff * inv_var[k];
                dlog_std[k] += g_logp * (diff * diff * inv_var[k] - 1.0);
            }
            net.backward_actor(ws, &dmean, grads);
        }

        let v = net.value(obs, ws);
        let err = v - batch.returns[i];
        stats.value_loss += 0.5 * err * err / m;
        net.backward_critic(ws, config.value_coef * err / m, grads);
    }

    stats.entropy = net.entropy();
    for (k, g) in dlog_std.iter().enumerate() {
        grads[ls.start + k] += g - config.entropy_coef;
    }
    stats.loss = -stats.surrogate + config.value_coef * stats.value_loss - config.entropy_coef * stats.entropy;
    stats
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    /// One descent step on `params` along `grads`.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PpoError {
    #[error("non-finite loss in epoch {epoch}, minibatch {minibatch}: {stats:?}")]
    NonFinite {
        epoch: usize,
        minibatch: usize,
        stats: LossStats,
    },
}

/// Several epochs of shuffled minibatch descent on `batch`. Advantages are
/// expected to be normalized already. Returns the stats of the last epoch,
/// averaged over its minibatches.
pub fn ppo_update<R: Rng + ?Sized>(
    net: &mut ActorCritic,
    adam: &mut Adam,
    batch: &Batch,
    config: &TrainConfig,
    rng: &mut R,
) -> Result<LossStats, PpoError> {
    let mut order: Vec<usize> = (0..batch.len()).collect();
    let mut grads = vec![0.0; net.param_count()];
    let mut ws = Workspace::default();
    let mut last = LossStats::default();
    for epoch in 0..config.epochs_per_update {
        order.shuffle(rng);
        let mut acc = LossStats::default();
        let chunks = order.chunks(config.minibatch_size.max(1));
        let count = chunks.len() as f64;
        for (mb, idx) in chunks.enumerate() {
            grads.fill(0.0);
            let s = loss_and_grad(net, batch, idx, config, &mut ws, &mut grads);
            if !s.loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(PpoError::NonFinite {
                    epoch,
                    minibatch: mb,
                    stats: s,
                });
            }
            let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
            if config.max_grad_norm > 0.0 && norm > config.max_grad_norm {
                let k = config.max_grad_norm / norm;
                grads.iter_mut().for_each(|g| *g *= k);
            }
            adam.step(&mut net.params, &grads);
            acc.loss += s.loss / count;
            acc.surrogate += s.surrogate / count;
            acc.value_loss += s.value_loss / count;
            acc.approx_kl += s.approx_kl / count;
            acc.clip_fraction += s.clip_fraction / count;
            acc.entropy = s.entropy;
        }
        last = acc;
    }
    last.entropy = net.entropy();
    Ok(last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn clip_arithmetic() {
        assert_eq!(clipped_surrogate(1.0, 0.7, 0.2), (0.7, true));
        let (v, active) = clipped_surrogate(2.0, 1.0, 0.2);
        assert!((v - 1.2).abs() < 1e-12 && !active);
        let (v, active) = clipped_surrogate(0.5, -1.0, 0.2);
        assert!((v + 0.8).abs() < 1e-12 && !active);
        let (v, active) = clipped_surrogate(0.5, 1.0, 0.2);
        assert!((v - 0.5).abs() < 1e-12 && active);
    }

    fn random_batch(net: &ActorCritic, n: usize, rng: &mut ChaCha8Rng) -> Batch {
        let mut b = Batch {
            obs_dim: net.obs_dim,
            act_dim: net.act_dim,
            ..Batch::default()
        };
        let mut ws = Workspace::default();
        let mut mean = Vec::new();
        for _ in 0..n {
            let o: Vec<f64> = (0..net.obs_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            net.mean(&o, &mut ws, &mut mean);
            let a: Vec<f64> = mean.iter().map(|m| m + 0.5 * rng.sample::<f64, _>(StandardNormal)).collect();
            // Old log-probs near the current ones keep ratios inside the
            // clip range for some samples and outside for others.
            let lp = net.log_prob(&mean, &a) + rng.random_range(-0.4..0.4);
            b.obs.extend(o);
            b.actions.extend(a);
            b.log_probs.push(lp);
            b.advantages.push(rng.sample(StandardNormal));
            b.returns.push(rng.sample(StandardNormal));
        }
        b
    }

    fn total_loss(net: &ActorCritic, b: &Batch, cfg: &TrainConfig) -> f64 {
        let mut g = vec![0.0; net.param_count()];
        let idx: Vec<usize> = (0..b.len()).collect();
        loss_and_grad(net, b, &idx, cfg, &mut Workspace::default(), &mut g).loss
    }

    #[test]
    fn mean_ratio_one_gives_mean_advantage() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = ActorCritic::random(6, 2, &[16, 16], &mut rng);
        let mut b = random_batch(&net, 32, &mut rng);
        let mut ws = Workspace::default();
        let mut mean = Vec::new();
        for i in 0..b.len() {
            net.mean(b.obs(i), &mut ws, &mut mean);
            b.log_probs[i] = net.log_prob(&mean, b.action(i));
        }
        b.normalize_advantages();
        let mut g = vec![0.0; net.param_count()];
        let idx: Vec<usize> = (0..b.len()).collect();
        let s = loss_and_grad(&net, &b, &idx, &TrainConfig::default(), &mut ws, &mut g);
        assert!(s.surrogate.abs() < 1e-12);
        assert!(s.approx_kl.abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut net = ActorCritic::random(6, 3, &[10, 9], &mut rng);
        // Larger output weights so every parameter has a visible gradient.
        for p in &mut net.params {
            *p += 0.2 * rng.sample::<f64, _>(StandardNormal);
        }
        let b = random_batch(&net, 8, &mut rng);
        let cfg = TrainConfig::default();
        let mut g = vec![0.0; net.param_count()];
        let idx: Vec<usize> = (0..b.len()).collect();
        loss_and_grad(&net, &b, &idx, &cfg, &mut Workspace::default(), &mut g);
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for i in 0..net.param_count() {
            let p = net.params[i];
            net.params[i] = p + h;
            let up = total_loss(&net, &b, &cfg);
            net.params[i] = p - h;
            let dn = total_loss(&net, &b, &cfg);
            net.params[i] = p;
            let fd = (up - dn) / (2.0 * h);
            let rel = (fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-6);
            worst = worst.max(rel);
        }
        assert!(worst < 1e-4, "max relative error {worst}");
    }

    #[test]
    fn update_reduces_loss_on_fixed_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut net = ActorCritic::random(6, 2, &[16, 16], &mut rng);
        let mut b = random_batch(&net, 256, &mut rng);
        b.normalize_advantages();
        let cfg = TrainConfig {
            minibatch_size: 64,
            learning_rate: 1e-3,
            ..TrainConfig::default()
        };
        let before = total_loss(&net, &b, &cfg);
        let mut adam = Adam::new(net.param_count(), cfg.learning_rate);
        ppo_update(&mut net, &mut adam, &b, &cfg, &mut rng).unwrap();
        assert!(total_loss(&net, &b, &cfg) < before);
    }

    #[test]
    fn non_finite_loss_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut net = ActorCritic::random(4, 1, &[8], &mut rng);
        let mut b = random_batch(&net, 16, &mut rng);
        b.returns[3] = f64::NAN;
        let cfg = TrainConfig::default();
        let mut adam = Adam::new(net.param_count(), cfg.learning_rate);
        let err = ppo_update(&mut net, &mut adam, &b, &cfg, &mut rng).unwrap_err();
        assert!(matches!(err, PpoError::NonFinite { epoch: 0, .. }));
    }

    #[test]
    fn config_validation_names_keys() {
        TrainConfig::default().validate().unwrap();
        let bad = TrainConfig {
            gamma: 0.0,
            ..TrainConfig::default()
        };
        assert_eq!(bad.validate().unwrap_err().key, "gamma");
        let bad = TrainConfig {
            clip_epsilon: 1.0,
            ..TrainConfig::default()
        };
        assert_eq!(bad.validate().unwrap_err().key, "clip_epsilon");
    }
}
