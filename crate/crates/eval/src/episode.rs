//! One evaluation episode: a simulator, the controller under test, scripted
//! opponents and the rule deciding success.

use serde::{Deserialize, Serialize};
use soccer_core::behavior::{strategy_position, PolicyBank, Script, SelectorDecision, TeamRuntime};
use soccer_core::geometry::{BallState, Team, Vec2, WorldState};
use soccer_core::policy_io::{write_observation, ActionDecoder, PolicyIoError, PolicyKind};
use soccer_core::sim::{SimError, SimEvent, SimEventKind, Simulator};
use soccer_core::skills::SkillCommand;

#[derive(Debug, thiserror::Error)]
pub enum EpisodeError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    PolicyIo(#[from] PolicyIoError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    Goal,
    /// A goal for the other team.
    Conceded,
    OutOfBounds,
    Timeout,
    /// Ball moved past the defender while under control.
    Passed,
    ControlLost,
    Arrived,
}

/// What drives the robot(s) under test.
#[derive(Debug, Clone)]
pub enum Controller {
    /// Heuristic selection over the sub-policies.
    Team(TeamRuntime),
    /// A single sub-policy, always active.
    Policy {
        id: u8,
        kind: PolicyKind,
        decoder: ActionDecoder,
    },
    /// A single sub-policy that sees the ball at `ghost` instead of where it
    /// is, used to steer ball-seeking policies toward an empty point.
    Ghost {
        id: u8,
        kind: PolicyKind,
        decoder: ActionDecoder,
        ghost: Vec2,
    },
    /// The walk-to-point skill with a fixed target.
    WalkToPoint { id: u8, target: Vec2, face: f64 },
}

impl Controller {
    pub fn policy(id: u8, kind: PolicyKind) -> Self {
        Controller::Policy {
            id,
            kind,
            decoder: ActionDecoder::new(),
        }
    }

    fn controls(&self, id: u8) -> bool {
        match self {
            Controller::Team(rt) => rt.agents.iter().any(|a| a.robot_id == id),
            Controller::Policy { id: me, .. } | Controller::Ghost { id: me, .. } | Controller::WalkToPoint { id: me, .. } => {
                *me == id
            }
        }
    }
}

/// How an episode is scored, checked after every tick.
#[derive(Debug, Clone, Copy)]
pub enum Judge {
    /// Success on a goal for `team`; failure on a concession or out of bounds.
    Scoring { team: Team },
    /// Success once the ball is past `defender` (toward the goal the attacker
    /// attacks), or in that goal, while the attacker is within
    /// `control_distance` of it.
    Dribble {
        attacker: u8,
        defender: u8,
        control_distance: f64,
        loss_time: f64,
    },
    /// Success once `robot` has advanced `distance` along `direction` from
    /// `start`.
    Walk {
        robot: u8,
        start: Vec2,
        direction: Vec2,
        distance: f64,
    },
}

/// How far past the defender the ball must be.
pub const PASS_MARGIN: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub success: bool,
    pub outcome: Outcome,
    /// Simulated seconds until the episode ended.
    pub time: f64,
    pub ticks: u64,
}

/// Per-tick trace record: the state after the tick, the events it raised,
/// the commands that produced it and the selector decisions behind them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceTick {
    pub tick: u64,
    pub robots: Vec<TraceRobot>,
    pub ball: TraceBall,
    pub events: Vec<SimEvent>,
    pub commands: Vec<SkillCommand>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub decisions: Vec<SelectorDecision>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRobot {
    pub id: u8,
    pub team: Team,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub upright: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceBall {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

impl TraceTick {
    pub fn capture(
        world: &WorldState,
        events: Vec<SimEvent>,
        commands: Vec<SkillCommand>,
        decisions: Vec<SelectorDecision>,
    ) -> Self {
        Self {
            tick: world.tick,
            robots: world
                .robots
                .iter()
                .map(|r| TraceRobot {
                    id: r.id,
                    team: r.team,
                    x: r.pose.x,
                    y: r.pose.y,
                    theta: r.pose.theta,
                    upright: r.upright,
                })
                .collect(),
            ball: TraceBall {
                x: world.ball.position.x,
                y: world.ball.position.y,
                vx: world.ball.velocity.x,
                vy: world.ball.velocity.y,
            },
            events,
            commands,
            decisions,
        }
    }
}

pub struct Episode {
    pub sim: Simulator,
    pub controller: Controller,
    /// Scripts by robot id for robots the controller does not drive.
    pub scripts: Vec<(u8, Script)>,
    pub judge: Judge,
    pub timeout: f64,
}

struct JudgeState {
    out_of_control: f64,
}

impl Episode {
    /// Runs to completion. With `trace`, every tick is recorded.
    pub fn run<B: PolicyBank + ?Sized>(
        mut self,
        bank: &B,
        mut trace: Option<&mut Vec<TraceTick>>,
    ) -> Result<EpisodeResult, EpisodeError> {
        let mut obs = Vec::new();
        let mut act = Vec::new();
        let mut commands = Vec::with_capacity(self.sim.world.robots.len());
        let mut state = JudgeState { out_of_control: 0.0 };
        loop {
            let (world, cfg, rng) = self.sim.parts_mut();
            let mut decisions = Vec::new();
            let mut driven: Vec<(u8, SkillCommand)> = Vec::new();
            match &mut self.controller {
                Controller::Team(rt) => {
                    let tick = rt.tick(world, bank, cfg, rng)?;
                    driven = tick.commands;
                    decisions = tick.decisions;
                }
                Controller::Policy { id, kind, decoder } => {
                    let spec = kind.spec();
                    let me = world.robot(*id).ok_or(PolicyIoError::UnknownRobot(*id))?;
                    let strategy = (*kind == PolicyKind::Positioning).then(|| strategy_position(world, *id, &cfg.field));
                    write_observation(&spec, world, *id, strategy, cfg, rng, &mut obs)?;
                    bank.mean_action(*kind, &obs, &mut act);
                    driven.push((*id, decoder.decode(&spec, &act, &me.pose, cfg)));
                }
                Controller::Ghost {
                    id,
                    kind,
                    decoder,
                    ghost,
                } => {
                    let spec = kind.spec();
                    let me = world.robot(*id).ok_or(PolicyIoError::UnknownRobot(*id))?;
                    let mut seen = world.clone();
                    seen.ball = BallState::at_rest(*ghost);
                    let strategy = (*kind == PolicyKind::Positioning).then_some(*ghost);
                    write_observation(&spec, &seen, *id, strategy, cfg, rng, &mut obs)?;
                    bank.mean_action(*kind, &obs, &mut act);
                    driven.push((*id, decoder.decode(&spec, &act, &me.pose, cfg)));
                }
                Controller::WalkToPoint { id, target, face } => {
                    driven.push((
                        *id,
                        SkillCommand::WalkToPoint {
                            target: *target,
                            face: *face,
                        },
                    ));
                }
            }
            commands.clear();
            for r in &world.robots {
                let cmd = if self.controller.controls(r.id) {
                    driven
                        .iter()
                        .find(|(id, _)| *id == r.id)
                        .map_or(SkillCommand::Stand, |(_, c)| *c)
                } else {
                    self.scripts
                        .iter()
                        .find(|(id, _)| *id == r.id)
                        .map_or(SkillCommand::Stand, |(_, s)| s.command(world, r.id, cfg))
                };
                commands.push(cmd);
            }
            let out = self.sim.step(&commands)?;
            let verdict = judge(&self.judge, &self.sim, &out.events, &mut state);
            let world = &self.sim.world;
            if let Some(t) = trace.as_deref_mut() {
                t.push(TraceTick::capture(world, out.events, commands.clone(), decisions));
            }
            let elapsed = world.elapsed();
            let verdict = verdict.or_else(|| (elapsed >= self.timeout - 1e-9).then_some((Outcome::Timeout, false)));
            if let Some((outcome, success)) = verdict {
                return Ok(EpisodeResult {
                    success,
                    outcome,
                    time: elapsed,
                    ticks: world.tick,
                });
            }
        }
    }
}

fn judge(judge: &Judge, sim: &Simulator, events: &[SimEvent], state: &mut JudgeState) -> Option<(Outcome, bool)> {
    let world = &sim.world;
    let scored = |team: Team| events.iter().find(|e| e.is_goal()).map(|e| e.is_goal_for(team));
    let oob = events.iter().any(|e| e.kind == SimEventKind::OutOfBounds);
    match *judge {
        Judge::Scoring { team } => match scored(team) {
            Some(true) => Some((Outcome::Goal, true)),
            Some(false) => Some((Outcome::Conceded, false)),
            None if oob => Some((Outcome::OutOfBounds, false)),
            None => None,
        },
        Judge::Dribble {
            attacker,
            defender,
            control_distance,
            loss_time,
        } => {
            let a = world.robot(attacker)?;
            let d = world.robot(defender)?;
            let ball = world.ball.position;
            let sign = a.team.attack_sign();
            let near = a.position().distance(ball) <= control_distance;
            if near && (ball.x - d.pose.x) * sign >= PASS_MARGIN {
                return Some((Outcome::Passed, true));
            }
            // Carrying the ball into the goal also takes it past the defender.
            if let Some(ours) = scored(a.team) {
                return Some(match (ours, near) {
                    (true, true) => (Outcome::Passed, true),
                    (true, false) => (Outcome::Goal, false),
                    (false, _) => (Outcome::Conceded, false),
                });
            }
            if oob {
                return Some((Outcome::OutOfBounds, false));
            }
            state.out_of_control = if near { 0.0 } else { state.out_of_control + world.dt };
            (state.out_of_control >= loss_time - 1e-9).then_some((Outcome::ControlLost, false))
        }
        Judge::Walk {
            robot,
            start,
            direction,
            distance,
        } => {
            let r = world.robot(robot)?;
            let progress = (r.position() - start).dot(direction);
            (progress >= distance).then_some((Outcome::Arrived, true))
        }
    }
}
