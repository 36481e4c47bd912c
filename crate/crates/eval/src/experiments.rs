//! The three evaluation experiments: sub-policy ablation in a 1v2 attack,
//! the LOW/HIGH training-fidelity matrix for NEAR_GOAL, and the velocity vs
//! walk-to-point action-space comparison.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use soccer_core::behavior::{defender_target, PolicyMask, Script, TeamRuntime};
use soccer_core::geometry::{BallState, FieldGeometry, Pose2D, RobotState, Team, Vec2, WorldState};
use soccer_core::policy_io::PolicyKind;
use soccer_core::sim::{Fidelity, Simulator};

use crate::bank::{load_weights, BankError, PolicySet};
use crate::config::AppConfig;
use crate::episode::{Controller, Episode, EpisodeError, EpisodeResult, Judge};
#[cfg(test)]
use crate::episode::Outcome;
use crate::report::{ConditionReport, EvalReport};
use crate::stats::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExperimentKind {
    #[serde(rename = "DECOMPOSITION_1V2")]
    Decomposition1v2,
    #[serde(rename = "FIDELITY_NEARGOAL")]
    FidelityNeargoal,
    #[serde(rename = "ACTIONSPACE_DRIBBLE")]
    ActionspaceDribble,
    #[serde(rename = "ACTIONSPACE_WALKTIME")]
    ActionspaceWalktime,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 4] = [
        ExperimentKind::Decomposition1v2,
        ExperimentKind::FidelityNeargoal,
        ExperimentKind::ActionspaceDribble,
        ExperimentKind::ActionspaceWalktime,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Decomposition1v2 => "DECOMPOSITION_1V2",
            ExperimentKind::FidelityNeargoal => "FIDELITY_NEARGOAL",
            ExperimentKind::ActionspaceDribble => "ACTIONSPACE_DRIBBLE",
            ExperimentKind::ActionspaceWalktime => "ACTIONSPACE_WALKTIME",
        }
    }

    /// Weight files the experiment reads: (policy, training fidelity).
    pub fn required_weights(self) -> &'static [(PolicyKind, Option<Fidelity>)] {
        match self {
            ExperimentKind::Decomposition1v2 => &[
                (PolicyKind::MidField, None),
                (PolicyKind::BallDuel, None),
                (PolicyKind::NearGoal, None),
                (PolicyKind::Positioning, None),
            ],
            ExperimentKind::FidelityNeargoal => &[
                (PolicyKind::NearGoal, Some(Fidelity::Low)),
                (PolicyKind::NearGoal, Some(Fidelity::High)),
            ],
            ExperimentKind::ActionspaceDribble | ExperimentKind::ActionspaceWalktime => {
                &[(PolicyKind::BallDuel, None), (PolicyKind::MidField, None)]
            }
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Weights(#[from] BankError),
    #[error(transparent)]
    Episode(#[from] EpisodeError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Config(#[from] soccer_core::ConfigError),
}

/// Weights by (policy, training fidelity); NEAR_GOAL's default is the
/// HIGH-trained file.
#[derive(Debug, Clone, Default)]
pub struct Arsenal {
    entries: BTreeMap<(PolicyKind, Option<Fidelity>), soccer_ppo::PolicyWeights>,
}

fn key(kind: PolicyKind, fidelity: Option<Fidelity>) -> (PolicyKind, Option<Fidelity>) {
    match kind {
        PolicyKind::NearGoal => (kind, Some(fidelity.unwrap_or(Fidelity::High))),
        _ => (kind, None),
    }
}

impl Arsenal {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, fidelity: Option<Fidelity>, w: soccer_ppo::PolicyWeights) {
        self.entries.insert(key(w.header.policy_name, fidelity), w);
    }

    pub fn get(&self, kind: PolicyKind, fidelity: Option<Fidelity>) -> Option<&soccer_ppo::PolicyWeights> {
        self.entries.get(&key(kind, fidelity))
    }

    /// Loads whatever `experiment` needs from `dir`.
    pub fn load(dir: &std::path::Path, experiment: ExperimentKind) -> Result<Self, BankError> {
        let mut a = Self::new();
        for &(kind, fid) in experiment.required_weights() {
            a.insert(fid, load_weights(dir, kind, fid)?);
        }
        Ok(a)
    }

    fn require(&self, kind: PolicyKind, fidelity: Option<Fidelity>) -> Result<&soccer_ppo::PolicyWeights, BankError> {
        self.get(kind, fidelity).ok_or_else(|| BankError::Missing {
            kind,
            path: crate::bank::weights_file(kind, fidelity).into(),
        })
    }

    /// A policy set holding the default file of each requested policy.
    fn set(&self, kinds: &[PolicyKind]) -> Result<PolicySet, BankError> {
        kinds
            .iter()
            .try_fold(PolicySet::new(), |s, &k| Ok(s.with(self.require(k, None)?.clone())))
    }

    pub fn hashes(&self, experiment: ExperimentKind) -> BTreeMap<String, String> {
        experiment
            .required_weights()
            .iter()
            .filter_map(|&(k, f)| {
                self.get(k, f)
                    .map(|w| (crate::bank::weights_file(k, f), w.content_hash()))
            })
            .collect()
    }
}

/// Seed stream of episode `index`: identical across conditions, so every
/// condition faces the same start states.
fn episode_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Where the attacker stands to have the ball at its feet, facing `dir`.
fn behind_ball(ball: Vec2, dir: Vec2, field: &FieldGeometry) -> Pose2D {
    let back = field.robot_half_length + field.ball_radius + 0.02;
    let p = ball - dir * back;
    Pose2D::new(p.x, p.y, dir.angle())
}

const ATTACKER: u8 = 0;
const DEFENDER: u8 = 5;
const GOALIE: u8 = 6;

fn goalie_pose(field: &FieldGeometry) -> Pose2D {
    Pose2D::new(field.half_length() - 0.3, 0.0, PI)
}

fn world_of(robots: Vec<RobotState>, ball: Vec2, dt: f64) -> WorldState {
    WorldState::new(robots, BallState::at_rest(ball), dt)
}

/// Everything needed to rebuild one episode: used by the runners and by
/// replay export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeKey {
    pub experiment: ExperimentKind,
    pub condition: String,
    pub index: u64,
    pub seed: u64,
}

pub struct Experiment<'a> {
    pub kind: ExperimentKind,
    pub config: &'a AppConfig,
    pub arsenal: &'a Arsenal,
    pub seed: u64,
}

struct Condition {
    name: String,
    build: Box<dyn Fn(u64) -> Episode + Sync + Send>,
    bank: PolicySet,
}

impl<'a> Experiment<'a> {
    pub fn new(kind: ExperimentKind, config: &'a AppConfig, arsenal: &'a Arsenal, seed: u64) -> Self {
        Self {
            kind,
            config,
            arsenal,
            seed,
        }
    }

    pub fn condition_names(&self) -> Result<Vec<String>, EvalError> {
        Ok(self.conditions()?.into_iter().map(|c| c.name).collect())
    }

    fn conditions(&self) -> Result<Vec<Condition>, EvalError> {
        match self.kind {
            ExperimentKind::Decomposition1v2 => self.decomposition(),
            ExperimentKind::FidelityNeargoal => self.fidelity(),
            ExperimentKind::ActionspaceDribble => self.dribble(),
            ExperimentKind::ActionspaceWalktime => self.walktime(),
        }
    }

    /// Runs every condition for `episodes` episodes and assembles the report.
    pub fn run(&self, episodes: usize) -> Result<EvalReport, EvalError> {
        let mut reports = Vec::new();
        for cond in self.conditions()? {
            let results = run_condition(&cond, episodes)?;
            reports.push(ConditionReport::from_results(&cond.name, &results, &self.config.eval, self.seed)?);
        }
        Ok(EvalReport {
            experiment: self.kind,
            seed: self.seed,
            episodes,
            conditions: reports,
            weights: self.arsenal.hashes(self.kind),
            config: self.config.clone(),
        })
    }

    /// Runs a single episode of `condition`, optionally tracing it, and
    /// returns the initial world and simulator seed alongside the result.
    pub fn run_one(
        &self,
        condition: &str,
        index: u64,
        trace: Option<&mut Vec<crate::episode::TraceTick>>,
    ) -> Result<(EpisodeResult, WorldState, soccer_core::sim::SimConfig), EvalError> {
        let conds = self.conditions()?;
        let cond = conds
            .iter()
            .find(|c| c.name == condition)
            .ok_or_else(|| soccer_core::ConfigError::invalid("condition", &format!("unknown condition `{condition}`")))?;
        let ep = (cond.build)(index);
        let start = ep.sim.world.clone();
        let cfg = ep.sim.config;
        let r = ep.run(&cond.bank.view(), trace)?;
        Ok((r, start, cfg))
    }

    fn decomposition(&self) -> Result<Vec<Condition>, EvalError> {
        let bank = self.arsenal.set(&PolicyKind::ALL)?;
        let masks = [
            ("full", PolicyMask::ALL),
            ("no-midfield", PolicyMask::without(PolicyKind::MidField)),
            ("no-neargoal", PolicyMask::without(PolicyKind::NearGoal)),
            ("no-ballduel", PolicyMask::without(PolicyKind::BallDuel)),
        ];
        Ok(masks
            .into_iter()
            .map(|(name, mask)| {
                let seed = self.seed;
                let cfg = self.config.clone();
                let this = SimFactory { config: cfg.clone() };
                Condition {
                    name: name.to_owned(),
                    bank: bank.clone(),
                    build: Box::new(move |i| {
                        let mut rng = episode_rng(seed, i);
                        let world = spawn_attack(&mut rng, &cfg.sim.field, cfg.sim.dt);
                        Episode {
                            sim: this.sim(Fidelity::High, &mut rng, world),
                            controller: Controller::Team(TeamRuntime::new(&[ATTACKER], cfg.selector, mask)),
                            scripts: vec![
                                (DEFENDER, Script::Defender { weakened: true }),
                                (GOALIE, Script::Goalie { weakened: true }),
                            ],
                            judge: Judge::Scoring { team: Team::Home },
                            timeout: cfg.eval.timeout,
                        }
                    }),
                }
            })
            .collect())
    }

    fn fidelity(&self) -> Result<Vec<Condition>, EvalError> {
        let mut out = Vec::new();
        for scenario in [FidelityScenario::Goalie, FidelityScenario::GoalieDefender] {
            for trained in [Fidelity::Low, Fidelity::High] {
                let w = self.arsenal.require(PolicyKind::NearGoal, Some(trained))?.clone();
                let bank = PolicySet::new().with(w);
                for eval in [Fidelity::Low, Fidelity::High] {
                    let seed = self.seed;
                    let cfg = self.config.clone();
                    let this = SimFactory { config: cfg.clone() };
                    out.push(Condition {
                        name: fidelity_condition(scenario, trained, eval),
                        bank: bank.clone(),
                        build: Box::new(move |i| {
                            let mut rng = episode_rng(seed, i);
                            let world = spawn_near_goal(&mut rng, &cfg.sim.field, cfg.sim.dt, scenario);
                            let mut scripts = vec![(GOALIE, Script::Goalie { weakened: true })];
                            if scenario == FidelityScenario::GoalieDefender {
                                scripts.push((DEFENDER, Script::Defender { weakened: true }));
                            }
                            Episode {
                                sim: this.sim(eval, &mut rng, world),
                                controller: Controller::policy(ATTACKER, PolicyKind::NearGoal),
                                scripts,
                                judge: Judge::Scoring { team: Team::Home },
                                timeout: cfg.eval.timeout,
                            }
                        }),
                    });
                }
            }
        }
        Ok(out)
    }

    fn dribble(&self) -> Result<Vec<Condition>, EvalError> {
        let modes = [
            (DRIBBLE_VELOCITY, PolicyKind::BallDuel),
            (DRIBBLE_POINT, PolicyKind::MidField),
        ];
        modes
            .into_iter()
            .map(|(name, kind)| {
                let bank = self.arsenal.set(&[kind])?;
                let seed = self.seed;
                let cfg = self.config.clone();
                let this = SimFactory { config: cfg.clone() };
                Ok(Condition {
                    name: name.to_owned(),
                    bank,
                    build: Box::new(move |i| {
                        let mut rng = episode_rng(seed, i);
                        let world = spawn_dribble(&mut rng, &cfg.sim.field, cfg.sim.dt);
                        Episode {
                            sim: this.sim(Fidelity::Low, &mut rng, world),
                            controller: Controller::policy(ATTACKER, kind),
                            scripts: vec![(DEFENDER, Script::Defender { weakened: true })],
                            judge: Judge::Dribble {
                                attacker: ATTACKER,
                                defender: DEFENDER,
                                control_distance: cfg.eval.control_distance,
                                loss_time: cfg.eval.control_loss_time,
                            },
                            timeout: cfg.eval.timeout,
                        }
                    }),
                })
            })
            .collect()
    }

    fn walktime(&self) -> Result<Vec<Condition>, EvalError> {
        let velocity_bank = self.arsenal.set(&[PolicyKind::BallDuel])?;
        let mut out = Vec::new();
        for (name, velocity) in [(WALK_POINT, false), (WALK_VELOCITY, true)] {
            let seed = self.seed;
            let cfg = self.config.clone();
            let this = SimFactory { config: cfg.clone() };
            out.push(Condition {
                name: name.to_owned(),
                bank: if velocity { velocity_bank.clone() } else { PolicySet::new() },
                build: Box::new(move |i| {
                    let mut rng = episode_rng(seed, i);
                    let (world, start, dir) = spawn_walk(&mut rng, &cfg.sim.field, cfg.sim.dt);
                    let target = start + dir * (WALK_DISTANCE + WALK_LEAD);
                    let controller = if velocity {
                        Controller::Ghost {
                            id: ATTACKER,
                            kind: PolicyKind::BallDuel,
                            decoder: Default::default(),
                            ghost: target,
                        }
                    } else {
                        Controller::WalkToPoint {
                            id: ATTACKER,
                            target,
                            face: dir.angle(),
                        }
                    };
                    Episode {
                        sim: this.sim(Fidelity::Low, &mut rng, world),
                        controller,
                        scripts: Vec::new(),
                        judge: Judge::Walk {
                            robot: ATTACKER,
                            start,
                            direction: dir,
                            distance: WALK_DISTANCE,
                        },
                        timeout: cfg.eval.timeout,
                    }
                }),
            });
        }
        Ok(out)
    }
}

struct SimFactory {
    config: AppConfig,
}

impl SimFactory {
    fn sim(&self, fidelity: Fidelity, rng: &mut ChaCha8Rng, world: WorldState) -> Simulator {
        let cfg = self.config.sim.with_fidelity(fidelity).with_seed(rng.random());
        Simulator::new(world, cfg)
    }
}

fn run_condition(cond: &Condition, episodes: usize) -> Result<Vec<EpisodeResult>, EvalError> {
    (0..episodes as u64)
        .into_par_iter()
        .map(|i| Ok((cond.build)(i).run(&cond.bank.view(), None)?))
        .collect()
}

pub const DRIBBLE_VELOCITY: &str = "velocity";
pub const DRIBBLE_POINT: &str = "point";
pub const WALK_POINT: &str = "walk-to-point";
pub const WALK_VELOCITY: &str = "velocity";
pub const WALK_DISTANCE: f64 = 4.0;
/// Both walkers aim this far beyond the 4 m line so neither slows down
/// before crossing it.
pub const WALK_LEAD: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FidelityScenario {
    Goalie,
    GoalieDefender,
}

impl FidelityScenario {
    pub fn as_str(self) -> &'static str {
        match self {
            FidelityScenario::Goalie => "GOALIE",
            FidelityScenario::GoalieDefender => "GOALIE_DEFENDER",
        }
    }
}

pub fn fidelity_condition(scenario: FidelityScenario, trained: Fidelity, eval: Fidelity) -> String {
    format!("{} trained-{trained} eval-{eval}", scenario.as_str())
}

/// 1v2 attack: the attacker has the ball in its own half, a weakened defender
/// stands somewhere ahead and the weakened goalie guards the goal.
fn spawn_attack(rng: &mut ChaCha8Rng, field: &FieldGeometry, dt: f64) -> WorldState {
    let ball = Vec2::new(uniform(rng, (-2.5, -0.5)), uniform(rng, (-1.5, 1.5)));
    let attacker = behind_ball(ball, Vec2::new(1.0, 0.0), field);
    let defender = loop {
        let p = Vec2::new(uniform(rng, (0.5, 2.5)), uniform(rng, (-1.5, 1.5)));
        if p.distance(ball) >= 1.0 {
            break p;
        }
    };
    world_of(
        vec![
            RobotState::new(ATTACKER, Team::Home, attacker),
            RobotState::new(DEFENDER, Team::Away, Pose2D::new(defender.x, defender.y, PI)),
            RobotState::new(GOALIE, Team::Away, goalie_pose(field)),
        ],
        ball,
        dt,
    )
}

/// Ball inside the opposing goal box with the attacker behind it, aimed at
/// the goal center.
fn spawn_near_goal(rng: &mut ChaCha8Rng, field: &FieldGeometry, dt: f64, scenario: FidelityScenario) -> WorldState {
    let hl = field.half_length();
    let hw = field.goal_box_width * 0.5;
    let goalie = goalie_pose(field);
    loop {
        let ball = Vec2::new(uniform(rng, (hl - field.goal_box_depth, hl - 0.5)), uniform(rng, (-hw, hw)));
        let dir = (field.opponent_goal_center(Team::Home) - ball).normalized();
        let attacker = behind_ball(ball, dir, field);
        if ball.distance(goalie.position()) < 0.6 || !field.in_field(attacker.position()) {
            continue;
        }
        let mut robots = vec![
            RobotState::new(ATTACKER, Team::Home, attacker),
            RobotState::new(GOALIE, Team::Away, goalie),
        ];
        if scenario == FidelityScenario::GoalieDefender {
            let probe = world_of(robots.clone(), ball, dt);
            let d = defender_target(&probe, Team::Away, field);
            let clear = d.distance(ball) >= 0.4 && d.distance(goalie.position()) >= 0.45 && d.distance(attacker.position()) >= 0.45;
            if !clear {
                continue;
            }
            robots.push(RobotState::new(DEFENDER, Team::Away, Pose2D::new(d.x, d.y, (ball - d).angle())));
        }
        return world_of(robots, ball, dt);
    }
}

/// Attacker with the ball in its own half; the weakened defender starts on
/// its blocking point between ball and goal.
fn spawn_dribble(rng: &mut ChaCha8Rng, field: &FieldGeometry, dt: f64) -> WorldState {
    let ball = Vec2::new(uniform(rng, (-3.0, -1.0)), uniform(rng, (-1.5, 1.5)));
    let attacker = RobotState::new(ATTACKER, Team::Home, behind_ball(ball, Vec2::new(1.0, 0.0), field));
    let probe = world_of(vec![attacker], ball, dt);
    let d = defender_target(&probe, Team::Away, field);
    world_of(
        vec![attacker, RobotState::new(DEFENDER, Team::Away, Pose2D::new(d.x, d.y, (ball - d).angle()))],
        ball,
        dt,
    )
}

/// Start pose, a unit direction with the target 4 m along it inside the
/// field, and the ball parked beyond the sideline out of play.
fn spawn_walk(rng: &mut ChaCha8Rng, field: &FieldGeometry, dt: f64) -> (WorldState, Vec2, Vec2) {
    let (hx, hy) = (field.half_length() - 1.0, field.half_width() - 1.0);
    loop {
        let start = Vec2::new(uniform(rng, (-hx, hx)), uniform(rng, (-hy, hy)));
        let dir = Vec2::from_angle(uniform(rng, (-PI, PI)));
        let target = start + dir * WALK_DISTANCE;
        if target.x.abs() > hx || target.y.abs() > hy {
            continue;
        }
        let heading = uniform(rng, (-PI, PI));
        let robot = RobotState::new(ATTACKER, Team::Home, Pose2D::new(start.x, start.y, heading));
        let ball = Vec2::new(0.0, field.half_width() + 0.5);
        return (world_of(vec![robot], ball, dt), start, dir);
    }
}
