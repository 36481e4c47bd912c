//! Vectorized rollout collection and the PPO training loop.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use soccer_core::env::Env;
use soccer_core::rewards::{RewardConfig, Terminal};
use soccer_core::scenario::ScenarioSpec;
use soccer_core::sim::{SimConfig, SimError};
use soccer_core::ConfigError;

use crate::gae::gae;
use crate::net::{ActorCritic, Workspace};
use crate::ppo::{ppo_update, Adam, Batch, PpoError, TrainConfig};

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Ppo(#[from] PpoError),
}

/// One row of the learning curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub update: usize,
    pub steps: u64,
    /// Mean undiscounted return of the last 100 finished episodes.
    pub mean_return: f64,
    pub entropy: f64,
    /// Goal rate of the last 100 finished episodes.
    pub goal_rate: f64,
    pub episodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode_return: f64,
    pub terminal: Terminal,
    pub steps: u32,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: ActorCritic,
    pub curve: Vec<CurveRow>,
    pub episodes: Vec<EpisodeRecord>,
    pub steps: u64,
}

impl TrainOutcome {
    /// Goal rate over the last `n` finished episodes.
    pub fn final_goal_rate(&self, n: usize) -> f64 {
        let tail = &self.episodes[self.episodes.len().saturating_sub(n)..];
        if tail.is_empty() {
            return 0.0;
        }
        tail.iter().filter(|e| e.terminal == Terminal::Goal).count() as f64 / tail.len() as f64
    }
}

struct Worker {
    env: Env,
    rng: ChaCha8Rng,
    ws: Workspace,
    obs: Vec<f64>,
    act: Vec<f64>,
    ep_steps: u32,
    // Segment storage.
    seg_obs: Vec<f64>,
    seg_act: Vec<f64>,
    seg_logp: Vec<f64>,
    seg_val: Vec<f64>,
    seg_rew: Vec<f64>,
    seg_done: Vec<bool>,
    finished: Vec<EpisodeRecord>,
}

impl Worker {
    fn new(env: Env, seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1 << 32 | index);
        let mut w = Self {
            env,
            rng,
            ws: Workspace::default(),
            obs: Vec::new(),
            act: Vec::new(),
            ep_steps: 0,
            seg_obs: Vec::new(),
            seg_act: Vec::new(),
            seg_logp: Vec::new(),
            seg_val: Vec::new(),
            seg_rew: Vec::new(),
            seg_done: Vec::new(),
            finished: Vec::new(),
        };
        w.env.observe(&mut w.obs);
        w
    }

    fn collect(&mut self, net: &ActorCritic, steps: usize) -> Result<f64, SimError> {
        self.seg_obs.clear();
        self.seg_act.clear();
        self.seg_logp.clear();
        self.seg_val.clear();
        self.seg_rew.clear();
        self.seg_done.clear();
        self.finished.clear();
        for _ in 0..steps {
            let v = net.value(&self.obs, &mut self.ws);
            let logp = net.sample(&self.obs, &mut self.ws, &mut self.rng, &mut self.act);
            self.seg_obs.extend_from_slice(&self.obs);
            self.seg_act.extend_from_slice(&self.act);
            self.seg_logp.push(logp);
            self.seg_val.push(v);
            let s = self.env.step(&self.act)?;
            self.ep_steps += 1;
            self.seg_rew.push(s.reward);
            let done = s.terminal.is_done();
            self.seg_done.push(done);
            if done {
                self.finished.push(EpisodeRecord {
                    episode_return: self.env.episode_return(),
                    terminal: s.terminal,
                    steps: self.ep_steps,
                });
                self.ep_steps = 0;
                self.env.reset();
            }
            self.env.observe(&mut self.obs);
        }
        Ok(net.value(&self.obs, &mut self.ws))
    }
}

/// Trains a fresh policy for `spec.policy` in `spec`. `on_update` sees each
/// learning-curve row as it is produced.
pub fn train(
    spec: &ScenarioSpec,
    sim: &SimConfig,
    rewards: &RewardConfig,
    config: &TrainConfig,
    mut on_update: impl FnMut(&CurveRow, &ActorCritic),
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    sim.validate()?;
    rewards.validate().map_err(|e| e.nest("rewards"))?;
    let pspec = spec.policy.spec();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut net = ActorCritic::random(pspec.obs_dim, pspec.act_dim, &config.hidden, &mut rng);
    let mut adam = Adam::new(net.param_count(), config.learning_rate);
    let mut workers: Vec<Worker> = (0..config.n_envs as u64)
        .map(|i| Worker::new(Env::new(spec.clone(), sim, *rewards, config.seed, i), config.seed, i))
        .collect();
    let per_env = config.rollout_length / config.n_envs;

    let mut steps = 0u64;
    let mut curve = Vec::new();
    let mut episodes = Vec::new();
    let mut window: VecDeque<EpisodeRecord> = VecDeque::with_capacity(100);
    let mut update = 0;
    while steps < config.total_steps {
        let bootstraps: Vec<f64> = workers
            .par_iter_mut()
            .map(|w| w.collect(&net, per_env))
            .collect::<Result<_, _>>()?;

        let mut batch = Batch {
            obs_dim: pspec.obs_dim,
            act_dim: pspec.act_dim,
            ..Batch::default()
        };
        for (w, boot) in workers.iter().zip(bootstraps) {
            let mut values = w.seg_val.clone();
            values.push(boot);
            let (adv, ret) = gae(&w.seg_rew, &values, &w.seg_done, config.gamma, config.gae_lambda)
                .expect("segment buffers have consistent lengths");
            batch.obs.extend_from_slice(&w.seg_obs);
            batch.actions.extend_from_slice(&w.seg_act);
            batch.log_probs.extend_from_slice(&w.seg_logp);
            batch.advantages.extend(adv);
            batch.returns.extend(ret);
            for e in &w.finished {
                if window.len() == 100 {
                    window.pop_front();
                }
                window.push_back(*e);
                episodes.push(*e);
            }
        }
        steps += batch.len() as u64;
        batch.normalize_advantages();
        let stats = ppo_update(&mut net, &mut adam, &batch, config, &mut rng)?;

        let n = window.len().max(1) as f64;
        let row = CurveRow {
            update,
            steps,
            mean_return: window.iter().map(|e| e.episode_return).sum::<f64>() / n,
            entropy: stats.entropy,
            goal_rate: window.iter().filter(|e| e.terminal == Terminal::Goal).count() as f64 / n,
            episodes: episodes.len(),
        };
        on_update(&row, &net);
        curve.push(row);
        update += 1;
        if let Some(target) = config.stop_at_goal_rate {
            if window.len() == 100 && row.goal_rate >= target {
                break;
            }
        }
    }
    Ok(TrainOutcome {
        net,
        curve,
        episodes,
        steps,
    })
}

/// How evaluation rollouts choose actions.
#[derive(Debug, Clone, Copy)]
pub enum Actor<'a> {
    /// Deterministic mean action.
    Policy(&'a ActorCritic),
    /// Uniform in [−1, 1] per dimension.
    Random,
}

/// Runs `episodes` full episodes and returns their records. Episode `i` uses
/// environment stream `i`, so results do not depend on batching.
pub fn evaluate(
    spec: &ScenarioSpec,
    sim: &SimConfig,
    rewards: &RewardConfig,
    actor: Actor<'_>,
    episodes: usize,
    seed: u64,
) -> Result<Vec<EpisodeRecord>, SimError> {
    (0..episodes as u64)
        .into_par_iter()
        .map(|i| {
            let mut env = Env::new(spec.clone(), sim, *rewards, seed, i);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(2 << 32 | i);
            let mut ws = Workspace::default();
            let (mut obs, mut act) = (Vec::new(), Vec::new());
            let dim = env.policy().act_dim;
            let mut steps = 0;
            loop {
                env.observe(&mut obs);
                match actor {
                    Actor::Policy(net) => net.act_deterministic(&obs, &mut ws, &mut act),
                    Actor::Random => {
                        act.clear();
                        act.extend((0..dim).map(|_| rng.random_range(-1.0..=1.0)));
                    }
                }
                let s = env.step(&act)?;
                steps += 1;
                if s.terminal.is_done() {
                    return Ok(EpisodeRecord {
                        episode_return: env.episode_return(),
                        terminal: s.terminal,
                        steps,
                    });
                }
            }
        })
        .collect()
}

/// Writes the learning curve as CSV.
pub fn write_curve<W: std::io::Write>(rows: &[CurveRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
