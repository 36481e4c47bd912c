//! Gaussian actor-critic built from two tanh MLPs over one flat parameter
//! vector.
//!
//! Parameter layout (layout version 1), each dense layer stored as its
//! weight matrix row-major `[out][in]` followed by its bias `[out]`:
//!
//! ```text
//! actor:   obs→h1, h1→h2, h2→act
//! log_std: [act]
//! critic:  obs→h1, h1→h2, h2→1
//! ```

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub const LAYOUT_VERSION: u32 = 1;
const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Mlp {
    sizes: Vec<usize>,
    offset: usize,
}

impl Mlp {
    fn param_count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// Forward pass; `acts[0]` is the input, `acts[k]` the output of layer k.
    /// Hidden layers use tanh, the last layer is linear.
    fn forward(&self, params: &[f64], input: &[f64], acts: &mut Vec<Vec<f64>>) {
        let n = self.sizes.len();
        acts.resize_with(n, Vec::new);
        acts[0].clear();
        acts[0].extend_from_slice(input);
        let mut off = self.offset;
        for l in 0..n - 1 {
            let (ni, no) = (self.sizes[l], self.sizes[l + 1]);
            let w = &params[off..off + ni * no];
            let b = &params[off + ni * no..off + ni * no + no];
            off += ni * no + no;
            let (prev, rest) = acts.split_at_mut(l + 1);
            let x = &prev[l];
            let y = &mut rest[0];
            y.clear();
            for o in 0..no {
                let row = &w[o * ni..(o + 1) * ni];
                let s: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b[o];
                y.push(if l + 1 < n - 1 { s.tanh() } else { s });
            }
        }
    }

    /// Accumulates parameter gradients given d(loss)/d(output) and the
    /// activations of a matching forward pass.
    fn backward(&self, params: &[f64], grads: &mut [f64], acts: &[Vec<f64>], dout: &[f64], delta: &mut Vec<f64>, scratch: &mut Vec<f64>) {
        let n = self.sizes.len();
        let mut offs = Vec::with_capacity(n - 1);
        let mut off = self.offset;
        for l in 0..n - 1 {
            offs.push(off);
            off += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        delta.clear();
        delta.extend_from_slice(dout);
        for l in (0..n - 1).rev() {
            let (ni, no) = (self.sizes[l], self.sizes[l + 1]);
            let off = offs[l];
            let x = &acts[l];
            for o in 0..no {
                let d = delta[o];
                if d != 0.0 {
                    let g = &mut grads[off + o * ni..off + (o + 1) * ni];
                    for (gi, xi) in g.iter_mut().zip(x) {
                        *gi += d * xi;
                    }
                }
                grads[off + ni * no + o] += d;
            }
            if l == 0 {
                break;
            }
            let w = &params[off..off + ni * no];
            scratch.clear();
            scratch.resize(ni, 0.0);
            for o in 0..no {
                let d = delta[o];
                if d != 0.0 {
                    for (s, wi) in scratch.iter_mut().zip(&w[o * ni..(o + 1) * ni]) {
                        *s += d * wi;
                    }
                }
            }
            // tanh' = 1 − y²
            for (s, y) in scratch.iter_mut().zip(&acts[l]) {
                *s *= 1.0 - y * y;
            }
            std::mem::swap(delta, scratch);
        }
    }

    fn init<R: Rng + ?Sized>(&self, params: &mut [f64], out_gain: f64, rng: &mut R) {
        let mut off = self.offset;
        let n = self.sizes.len();
        for l in 0..n - 1 {
            let (ni, no) = (self.sizes[l], self.sizes[l + 1]);
            let gain = if l + 1 == n - 1 { out_gain } else { 1.0 };
            let std = gain / (ni as f64).sqrt();
            for w in &mut params[off..off + ni * no] {
                *w = std * rng.sample::<f64, _>(StandardNormal);
            }
            params[off + ni * no..off + ni * no + no].fill(0.0);
            off += ni * no + no;
        }
    }
}

/// Reusable buffers for forward/backward passes.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    actor: Vec<Vec<f64>>,
    critic: Vec<Vec<f64>>,
    delta: Vec<f64>,
    scratch: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorCritic {
    pub obs_dim: usize,
    pub act_dim: usize,
    pub hidden: Vec<usize>,
    actor: Mlp,
    critic: Mlp,
    log_std_offset: usize,
    pub params: Vec<f64>,
}

impl ActorCritic {
    /// Zero-initialized network; see [`ActorCritic::random`].
    pub fn new(obs_dim: usize, act_dim: usize, hidden: &[usize]) -> Self {
        let mut a = vec![obs_dim];
        a.extend_from_slice(hidden);
        a.push(act_dim);
        let mut c = vec![obs_dim];
        c.extend_from_slice(hidden);
        c.push(1);
        let na = Mlp::param_count(&a);
        let nc = Mlp::param_count(&c);
        Self {
            obs_dim,
            act_dim,
            hidden: hidden.to_vec(),
            actor: Mlp { sizes: a, offset: 0 },
            log_std_offset: na,
            critic: Mlp {
                sizes: c,
                offset: na + act_dim,
            },
            params: vec![0.0; na + act_dim + nc],
        }
    }

    /// Scaled-Gaussian weights, zero biases, small actor output layer and
    /// log-std at −0.5.
    pub fn random<R: Rng + ?Sized>(obs_dim: usize, act_dim: usize, hidden: &[usize], rng: &mut R) -> Self {
        let mut net = Self::new(obs_dim, act_dim, hidden);
        let mut params = std::mem::take(&mut net.params);
        net.actor.init(&mut params, 0.01, rng);
        net.critic.init(&mut params, 1.0, rng);
        params[net.log_std_offset..net.log_std_offset + act_dim].fill(-0.5);
        net.params = params;
        net
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn actor_sizes(&self) -> &[usize] {
        &self.actor.sizes
    }

    pub fn critic_sizes(&self) -> &[usize] {
        &self.critic.sizes
    }

    pub fn log_std(&self) -> &[f64] {
        &self.params[self.log_std_offset..self.log_std_offset + self.act_dim]
    }

    pub fn log_std_range(&self) -> std::ops::Range<usize> {
        self.log_std_offset..self.log_std_offset + self.act_dim
    }

    /// Action mean (unclipped).
    pub fn mean(&self, obs: &[f64], ws: &mut Workspace, out: &mut Vec<f64>) {
        self.actor.forward(&self.params, obs, &mut ws.actor);
        out.clear();
        out.extend_from_slice(ws.actor.last().expect("output layer"));
    }

    pub fn value(&self, obs: &[f64], ws: &mut Workspace) -> f64 {
        self.critic.forward(&self.params, obs, &mut ws.critic);
        ws.critic.last().expect("output layer")[0]
    }

    /// Draws a raw (unclipped) Gaussian action and returns its log-density.
    pub fn sample<R: Rng + ?Sized>(&self, obs: &[f64], ws: &mut Workspace, rng: &mut R, action: &mut Vec<f64>) -> f64 {
        self.mean(obs, ws, action);
        let mut logp = 0.0;
        for (a, &s) in action.iter_mut().zip(self.log_std()) {
            let z: f64 = rng.sample(StandardNormal);
            *a += s.exp() * z;
            logp += -0.5 * z * z - s - 0.5 * LN_2PI;
        }
        logp
    }

    pub fn log_prob(&self, mean: &[f64], action: &[f64]) -> f64 {
        mean.iter()
            .zip(action)
            .zip(self.log_std())
            .map(|((m, a), &s)| {
                let z = (a - m) / s.exp();
                -0.5 * z * z - s - 0.5 * LN_2PI
            })
            .sum()
    }

    /// Differential entropy of the action distribution.
    pub fn entropy(&self) -> f64 {
        self.log_std().iter().map(|s| s + 0.5 * (LN_2PI + 1.0)).sum()
    }

    /// Deterministic deployment action: the mean clipped to [−1, 1].
    pub fn act_deterministic(&self, obs: &[f64], ws: &mut Workspace, out: &mut Vec<f64>) {
        self.mean(obs, ws, out);
        for a in out.iter_mut() {
            *a = a.clamp(-1.0, 1.0);
        }
    }

    /// Backpropagates d(loss)/d(mean) through the actor after a `mean` call on
    /// the same workspace.
    pub fn backward_actor(&self, ws: &mut Workspace, dmean: &[f64], grads: &mut [f64]) {
        let Workspace {
            actor, delta, scratch, ..
        } = ws;
        self.actor.backward(&self.params, grads, actor, dmean, delta, scratch);
    }

    /// Backpropagates d(loss)/d(value) after a `value` call.
    pub fn backward_critic(&self, ws: &mut Workspace, dvalue: f64, grads: &mut [f64]) {
        let Workspace {
            critic, delta, scratch, ..
        } = ws;
        self.critic.backward(&self.params, grads, critic, &[dvalue], delta, scratch);
    }
}
