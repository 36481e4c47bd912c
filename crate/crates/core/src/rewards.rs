//! Per-policy rewards and episode termination.

use serde::{Deserialize, Serialize};

use crate::geometry::{Vec2, WorldState};
use crate::policy_io::PolicyKind;
use crate::sim::{SimConfig, SimEvent, SimEventKind};
use crate::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub w_to_ball: f64,
    pub w_ball_to_goal: f64,
    pub r_goal: f64,
    pub r_oob: f64,
    pub w_to_strategy: f64,
    pub r_ball_in_view: f64,
    pub w_opponent_proximity: f64,
    pub r_ball_far_from_goal: f64,
    pub far_from_goal_radius: f64,
    /// Seconds.
    pub episode_timeout: f64,
    /// Half-width of the heading cone in which the ball counts as in view.
    pub view_half_angle: f64,
    /// Opponents closer than this trigger the proximity penalty.
    pub opponent_proximity_radius: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            w_to_ball: 0.5,
            w_ball_to_goal: 1.0,
            r_goal: 10.0,
            r_oob: -5.0,
            w_to_strategy: 1.0,
            r_ball_in_view: 0.01,
            w_opponent_proximity: -0.05,
            r_ball_far_from_goal: -5.0,
            far_from_goal_radius: 2.5,
            episode_timeout: 60.0,
            view_half_angle: 1.0,
            opponent_proximity_radius: 0.5,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let all = [
            ("w_to_ball", self.w_to_ball),
            ("w_ball_to_goal", self.w_ball_to_goal),
            ("r_goal", self.r_goal),
            ("r_oob", self.r_oob),
            ("w_to_strategy", self.w_to_strategy),
            ("r_ball_in_view", self.r_ball_in_view),
            ("w_opponent_proximity", self.w_opponent_proximity),
            ("r_ball_far_from_goal", self.r_ball_far_from_goal),
            ("far_from_goal_radius", self.far_from_goal_radius),
            ("episode_timeout", self.episode_timeout),
            ("view_half_angle", self.view_half_angle),
            ("opponent_proximity_radius", self.opponent_proximity_radius),
        ];
        for (key, v) in all {
            if !v.is_finite() {
                return Err(ConfigError::invalid(key, "must be finite"));
            }
        }
        if self.r_goal <= 0.0 {
            return Err(ConfigError::invalid("r_goal", "must be > 0"));
        }
        for (key, v) in [
            ("r_oob", self.r_oob),
            ("w_opponent_proximity", self.w_opponent_proximity),
            ("r_ball_far_from_goal", self.r_ball_far_from_goal),
        ] {
            if v > 0.0 {
                return Err(ConfigError::invalid(key, "penalty must be <= 0"));
            }
        }
        for (key, v) in [
            ("far_from_goal_radius", self.far_from_goal_radius),
            ("episode_timeout", self.episode_timeout),
            ("view_half_angle", self.view_half_angle),
            ("opponent_proximity_radius", self.opponent_proximity_radius),
        ] {
            if v <= 0.0 {
                return Err(ConfigError::invalid(key, "must be > 0"));
            }
        }
        Ok(())
    }

    /// Largest absolute reward any single step can produce, given that no
    /// robot or ball moves farther than `max_step` metres in one tick.
    pub fn step_bound(&self, max_step: f64) -> f64 {
        let shaping = (self.w_to_ball.abs() + self.w_ball_to_goal.abs() + self.w_to_strategy.abs()) * 2.0 * max_step;
        let terminal = self.r_goal.abs().max(self.r_oob.abs());
        shaping
            + terminal
            + self.r_ball_far_from_goal.abs()
            + self.r_ball_in_view.abs()
            + self.w_opponent_proximity.abs()
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RewardError {
    #[error("unknown policy `{0}`")]
    UnknownPolicy(String),
    #[error("robot {0} is not in the world")]
    UnknownRobot(u8),
    #[error("POSITIONING reward needs a strategy position")]
    MissingStrategyPosition,
}

/// Who is being rewarded, and (for POSITIONING) where it should stand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardContext {
    pub robot_id: u8,
    pub strategy_position: Option<Vec2>,
}

/// Per-tick reward of `policy` for the transition `prev → world`. Distance
/// deltas are `previous − current`, so progress is positive. A goal in the
/// robot's own goal is scored like an out-of-bounds.
pub fn reward(
    policy: PolicyKind,
    ctx: &RewardContext,
    prev: &WorldState,
    world: &WorldState,
    events: &[SimEvent],
    sim: &SimConfig,
    config: &RewardConfig,
) -> Result<f64, RewardError> {
    let id = ctx.robot_id;
    let me = world.robot(id).ok_or(RewardError::UnknownRobot(id))?;
    let me_prev = prev.robot(id).ok_or(RewardError::UnknownRobot(id))?;
    let goal = sim.field.opponent_goal_center(me.team);
    let ball_goal = prev.ball.position.distance(goal) - world.ball.position.distance(goal);
    let to_ball = me_prev.position().distance(prev.ball.position) - me.position().distance(world.ball.position);

    let scored = events.iter().any(|e| e.is_goal_for(me.team));
    let conceded = events.iter().any(|e| e.is_goal() && !e.is_goal_for(me.team));
    let oob = !scored && !conceded && events.iter().any(|e| e.kind == SimEventKind::OutOfBounds);
    let ind = |b: bool| if b { 1.0 } else { 0.0 };
    let failure = ind(conceded) * config.r_oob;

    let r = match policy {
        PolicyKind::BallDuel => {
            config.w_to_ball * to_ball + config.w_ball_to_goal * ball_goal + config.r_goal * ind(scored) + failure
        }
        PolicyKind::MidField => {
            config.w_ball_to_goal * ball_goal + config.r_goal * ind(scored) + config.r_oob * ind(oob) + failure
        }
        PolicyKind::NearGoal => {
            let far = world.ball.position.distance(goal) > config.far_from_goal_radius;
            config.r_goal * ind(scored)
                + config.r_ball_far_from_goal * ind(far)
                + config.w_to_ball * to_ball
                + config.w_ball_to_goal * ball_goal
                + failure
        }
        PolicyKind::Positioning => {
            let target = ctx.strategy_position.ok_or(RewardError::MissingStrategyPosition)?;
            let to_target = me_prev.position().distance(target) - me.position().distance(target);
            let bearing = crate::geometry::to_egocentric(&me.pose, world.ball.position).angle();
            let in_view = bearing.abs() <= config.view_half_angle;
            let crowded = world
                .opponents(id)
                .any(|o| o.position().distance(me.position()) < config.opponent_proximity_radius);
            config.w_to_strategy * to_target
                + config.r_ball_in_view * ind(in_view)
                + config.w_opponent_proximity * ind(crowded)
        }
    };
    Ok(r)
}

/// String-keyed entry point for callers holding a policy name.
pub fn reward_by_name(
    policy: &str,
    ctx: &RewardContext,
    prev: &WorldState,
    world: &WorldState,
    events: &[SimEvent],
    sim: &SimConfig,
    config: &RewardConfig,
) -> Result<f64, RewardError> {
    let kind = policy
        .parse::<PolicyKind>()
        .map_err(|_| RewardError::UnknownPolicy(policy.to_owned()))?;
    reward(kind, ctx, prev, world, events, sim, config)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Terminal {
    Goal,
    OutOfBounds,
    Timeout,
    Running,
}

impl Terminal {
    pub fn is_done(self) -> bool {
        self != Terminal::Running
    }
}

/// Episode status after a tick. A goal takes priority over an out-of-bounds
/// reported in the same tick.
pub fn is_terminal(events: &[SimEvent], elapsed: f64, timeout: f64) -> Terminal {
    if events.iter().any(SimEvent::is_goal) {
        Terminal::Goal
    } else if events.iter().any(|e| e.kind == SimEventKind::OutOfBounds) {
        Terminal::OutOfBounds
    } else if elapsed >= timeout - 1e-9 {
        Terminal::Timeout
    } else {
        Terminal::Running
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BallState, Pose2D, RobotState, Team};
    use crate::sim::{step, RngStreams};
    use crate::skills::SkillCommand;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn world(robot: (f64, f64), ball: (f64, f64)) -> WorldState {
        WorldState::new(
            vec![
                RobotState::new(0, Team::Home, Pose2D::new(robot.0, robot.1, 0.0)),
                RobotState::new(5, Team::Away, Pose2D::new(-3.0, 2.0, 0.0)),
            ],
            BallState::at_rest(Vec2::new(ball.0, ball.1)),
            0.05,
        )
    }

    fn ev(kind: SimEventKind) -> SimEvent {
        SimEvent {
            kind,
            tick: 1,
            detail: BTreeMap::new(),
        }
    }

    fn ctx() -> RewardContext {
        RewardContext {
            robot_id: 0,
            strategy_position: Some(Vec2::new(-1.0, 0.0)),
        }
    }

    #[test]
    fn unchanged_state_is_zero() {
        let sim = SimConfig::default();
        let cfg = RewardConfig {
            r_ball_in_view: 0.0,
            ..RewardConfig::default()
        };
        // Ball close enough to the goal that the NEAR_GOAL penalty is off.
        let w = world((0.0, 0.0), (3.0, 1.0));
        for k in PolicyKind::ALL {
            assert_eq!(reward(k, &ctx(), &w, &w, &[], &sim, &cfg).unwrap(), 0.0, "{k}");
        }
    }

    #[test]
    fn goal_and_shaping() {
        let sim = SimConfig::default();
        let cfg = RewardConfig::default();
        let w = world((0.0, 0.0), (1.0, 0.0));
        let r = reward(PolicyKind::MidField, &ctx(), &w, &w, &[ev(SimEventKind::GoalHome)], &sim, &cfg).unwrap();
        assert_eq!(r, 10.0);
        let w2 = world((0.0, 0.0), (1.1, 0.0));
        let r = reward(PolicyKind::MidField, &ctx(), &w, &w2, &[], &sim, &cfg).unwrap();
        assert!((r - 0.1).abs() < 1e-12);
        let r = reward(PolicyKind::MidField, &ctx(), &w, &w, &[ev(SimEventKind::OutOfBounds)], &sim, &cfg).unwrap();
        assert_eq!(r, -5.0);
        let r = reward(PolicyKind::MidField, &ctx(), &w, &w, &[ev(SimEventKind::GoalAway)], &sim, &cfg).unwrap();
        assert_eq!(r, -5.0);
    }

    #[test]
    fn near_goal_far_penalty() {
        let sim = SimConfig::default();
        let cfg = RewardConfig::default();
        let w = world((0.0, 0.0), (1.0, 0.0));
        let r = reward(PolicyKind::NearGoal, &ctx(), &w, &w, &[], &sim, &cfg).unwrap();
        assert_eq!(r, -5.0);
        let w = world((3.0, 0.0), (3.5, 0.0));
        assert_eq!(reward(PolicyKind::NearGoal, &ctx(), &w, &w, &[], &sim, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn unknown_policy() {
        let w = world((0.0, 0.0), (1.0, 0.0));
        let e = reward_by_name("GOALIE", &ctx(), &w, &w, &[], &SimConfig::default(), &RewardConfig::default());
        assert_eq!(e, Err(RewardError::UnknownPolicy("GOALIE".into())));
        assert!(reward_by_name("mid_field", &ctx(), &w, &w, &[], &SimConfig::default(), &RewardConfig::default()).is_ok());
    }

    #[test]
    fn terminal_rules() {
        assert_eq!(is_terminal(&[], 60.0, 60.0), Terminal::Timeout);
        assert_eq!(is_terminal(&[], 59.95, 60.0), Terminal::Running);
        assert_eq!(is_terminal(&[ev(SimEventKind::GoalAway)], 3.0, 60.0), Terminal::Goal);
        assert_eq!(is_terminal(&[ev(SimEventKind::OutOfBounds)], 3.0, 60.0), Terminal::OutOfBounds);
        let both = [ev(SimEventKind::OutOfBounds), ev(SimEventKind::GoalHome)];
        assert_eq!(is_terminal(&both, 80.0, 60.0), Terminal::Goal);
    }

    #[test]
    fn default_config_is_valid() {
        RewardConfig::default().validate().unwrap();
        let bad = RewardConfig {
            r_oob: 1.0,
            ..RewardConfig::default()
        };
        assert_eq!(bad.validate().unwrap_err().key, "r_oob");
    }

    fn arb_cmd() -> impl Strategy<Value = SkillCommand> {
        prop_oneof![
            (-0.3f64..0.3, -0.3f64..0.3, -1.5f64..1.5).prop_map(|(vx, vy, omega)| SkillCommand::WalkAtVelocity { vx, vy, omega }),
            (-3.2f64..3.2).prop_map(|kick_angle| SkillCommand::WalkAndKick { kick_angle }),
            Just(SkillCommand::Stand),
        ]
    }

    proptest! {
        // Summed shaping deltas over a rollout equal initial minus final distance.
        #[test]
        fn shaping_telescopes(
            rx in -4.0f64..4.0, ry in -2.5f64..2.5, bx in -4.0f64..4.0, by in -2.5f64..2.5,
            cmds in proptest::collection::vec(arb_cmd(), 1..120),
        ) {
            let sim = SimConfig::default();
            let only_ball = RewardConfig { w_to_ball: 0.0, r_goal: 0.0, r_oob: 0.0, ..RewardConfig::default() };
            let mut w = world((rx, ry), (bx, by));
            let start = w.clone();
            let mut rng = RngStreams::new(3);
            let goal = sim.field.opponent_goal_center(Team::Home);
            let mut sum = 0.0;
            let bound = RewardConfig::default().step_bound(sim.kick_speed * sim.dt + 0.5);
            for c in cmds {
                let prev = w.clone();
                let out = step(&mut w, &[c, SkillCommand::Stand], &sim, &mut rng).unwrap();
                let r = reward(PolicyKind::MidField, &ctx(), &prev, &w, &out.events, &sim, &only_ball).unwrap();
                sum += r;
                for k in PolicyKind::ALL {
                    let r = reward(k, &ctx(), &prev, &w, &out.events, &sim, &RewardConfig::default()).unwrap();
                    prop_assert!(r.is_finite() && r.abs() <= bound);
                }
            }
            let expected = start.ball.position.distance(goal) - w.ball.position.distance(goal);
            prop_assert!((sum - expected).abs() < 1e-9);
        }
    }
}
