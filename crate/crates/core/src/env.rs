//! Single-learner training environment over a [`ScenarioSpec`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::behavior::strategy_position;
use crate::geometry::{Vec2, WorldState};
use crate::policy_io::{write_observation, ActionDecoder, PolicyKind, PolicySpec};
use crate::rewards::{is_terminal, reward, RewardConfig, RewardContext, Terminal};
use crate::scenario::ScenarioSpec;
use crate::sim::{step, RngStreams, SimConfig, SimError, SimEvent};
use crate::skills::SkillCommand;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvStep {
    pub reward: f64,
    pub terminal: Terminal,
}

#[derive(Debug, Clone)]
pub struct Env {
    spec: ScenarioSpec,
    policy: PolicySpec,
    sim: SimConfig,
    rewards: RewardConfig,
    world: WorldState,
    rng: RngStreams,
    episodes: ChaCha8Rng,
    decoder: ActionDecoder,
    learner: u8,
    learner_idx: usize,
    commands: Vec<SkillCommand>,
    events: Vec<SimEvent>,
    episode_return: f64,
}

impl Env {
    /// `stream` separates environments sharing one seed, so each draws its
    /// own episode sequence regardless of how they are scheduled.
    pub fn new(spec: ScenarioSpec, base: &SimConfig, rewards: RewardConfig, seed: u64, stream: u64) -> Self {
        let mut sim = base.with_fidelity(spec.fidelity);
        sim.field = spec.field;
        let mut episodes = ChaCha8Rng::seed_from_u64(seed);
        episodes.set_stream(stream);
        let learner = spec.learner_id();
        let world = spec.spawn(&mut episodes);
        let mut env = Self {
            policy: spec.policy.spec(),
            spec,
            sim,
            rewards,
            learner_idx: world.robot_index(learner).expect("learner spawned"),
            rng: RngStreams::new(0),
            world,
            episodes,
            decoder: ActionDecoder::new(),
            learner,
            commands: Vec::new(),
            events: Vec::new(),
            episode_return: 0.0,
        };
        env.rng = RngStreams::new(env.episodes.random());
        env
    }

    pub fn reset(&mut self) {
        self.world = self.spec.spawn(&mut self.episodes);
        self.world.dt = self.sim.dt;
        self.rng = RngStreams::new(self.episodes.random());
        self.decoder.reset();
        self.episode_return = 0.0;
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn policy(&self) -> &PolicySpec {
        &self.policy
    }

    pub fn sim_config(&self) -> &SimConfig {
        &self.sim
    }

    pub fn episode_return(&self) -> f64 {
        self.episode_return
    }

    fn strategy(&self) -> Option<Vec2> {
        Some(strategy_position(&self.world, self.learner, &self.sim.field))
    }

    pub fn observe(&mut self, out: &mut Vec<f64>) {
        let strategy = self.strategy();
        write_observation(&self.policy, &self.world, self.learner, strategy, &self.sim, &mut self.rng, out)
            .expect("learner exists and strategy is supplied");
    }

    /// Applies a raw learner action, advances one tick and scores it. The
    /// caller resets after a terminal step.
    pub fn step(&mut self, raw: &[f64]) -> Result<EnvStep, SimError> {
        let pose = self.world.robots[self.learner_idx].pose;
        let cmd = self.decoder.decode(&self.policy, raw, &pose, &self.sim);
        self.commands.clear();
        for (i, r) in self.world.robots.iter().enumerate() {
            let c = if i == self.learner_idx {
                cmd
            } else {
                self.spec.robots[i]
                    .script
                    .map_or(SkillCommand::Stand, |s| s.command(&self.world, r.id, &self.sim))
            };
            self.commands.push(c);
        }
        let ctx = RewardContext {
            robot_id: self.learner,
            strategy_position: self.strategy(),
        };
        let prev = self.world.clone();
        let out = step(&mut self.world, &self.commands, &self.sim, &mut self.rng)?;
        self.events = out.events;
        let r = reward(self.policy.kind, &ctx, &prev, &self.world, &self.events, &self.sim, &self.rewards)
            .expect("learner present");
        self.episode_return += r;
        let mut terminal = is_terminal(&self.events, self.world.elapsed(), self.spec.timeout);
        if terminal == Terminal::Running && self.ball_too_far() {
            terminal = Terminal::OutOfBounds;
        }
        Ok(EnvStep { reward: r, terminal })
    }

    /// NEAR_GOAL episodes end once the ball is pushed past the far-from-goal
    /// radius, so the far penalty is paid once.
    fn ball_too_far(&self) -> bool {
        if self.policy.kind != PolicyKind::NearGoal {
            return false;
        }
        let team = self.world.robots[self.learner_idx].team;
        let goal = self.sim.field.opponent_goal_center(team);
        self.world.ball.position.distance(goal) > self.rewards.far_from_goal_radius
    }

    pub fn last_events(&self) -> &[SimEvent] {
        &self.events
    }
}
