//! Observation vectors and action decoding for the four sub-policies.
//!
//! Every entry is egocentric to the acting robot and scaled by the field
//! half-length. Layouts are fixed; see [`layout`] for the authoritative order.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{normalize_angle, to_egocentric, Pose2D, Vec2, WorldState};
use crate::sim::{observe_point, RngStreams, SimConfig};
use crate::skills::{can_kick_one_hot, SkillCommand};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PolicyKind {
    MidField,
    BallDuel,
    NearGoal,
    Positioning,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::MidField,
        PolicyKind::BallDuel,
        PolicyKind::NearGoal,
        PolicyKind::Positioning,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::MidField => "MID_FIELD",
            PolicyKind::BallDuel => "BALL_DUEL",
            PolicyKind::NearGoal => "NEAR_GOAL",
            PolicyKind::Positioning => "POSITIONING",
        }
    }

    pub fn spec(self) -> PolicySpec {
        PolicySpec::for_kind(self)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == norm || k.as_str().replace('_', "") == norm)
            .ok_or_else(|| format!("unknown policy `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SkillBinding {
    KickAngle,
    Velocity,
    VelocityWithStand,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    pub obs_dim: usize,
    pub act_dim: usize,
    pub skill_binding: SkillBinding,
    /// Largest kick-angle change per tick (rad), MID_FIELD only.
    pub delta_theta_clip: f64,
}

impl PolicySpec {
    pub fn for_kind(kind: PolicyKind) -> Self {
        let obs_dim = layout(kind).iter().map(|e| e.width).sum();
        let (act_dim, skill_binding) = match kind {
            PolicyKind::MidField => (1, SkillBinding::KickAngle),
            PolicyKind::BallDuel | PolicyKind::NearGoal => (3, SkillBinding::Velocity),
            PolicyKind::Positioning => (4, SkillBinding::VelocityWithStand),
        };
        Self {
            kind,
            obs_dim,
            act_dim,
            skill_binding,
            delta_theta_clip: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LayoutEntry {
    pub name: &'static str,
    pub width: usize,
    pub description: &'static str,
}

const BALL: LayoutEntry = LayoutEntry {
    name: "ball",
    width: 2,
    description: "sensed ball position (x, y)",
};
const CAN_KICK: LayoutEntry = LayoutEntry {
    name: "can_kick",
    width: 2,
    description: "one-hot [no, yes]; unscaled",
};
const GOAL_CENTER: LayoutEntry = LayoutEntry {
    name: "goal_center",
    width: 2,
    description: "center of the goal being attacked",
};
const ALL_POSTS: LayoutEntry = LayoutEntry {
    name: "goalposts",
    width: 8,
    description: "posts in order (+x,+y) (+x,-y) (-x,+y) (-x,-y), global labels",
};
const OPP_POSTS: LayoutEntry = LayoutEntry {
    name: "opponent_goalposts",
    width: 4,
    description: "posts of the attacked goal, left (+y global) first",
};
const SIDES: LayoutEntry = LayoutEntry {
    name: "field_sides",
    width: 4,
    description: "signed distances to the +y, -y, +x, -x boundary lines",
};
const HISTORY: LayoutEntry = LayoutEntry {
    name: "ball_history",
    width: 6,
    description: "sensed ball positions at the three previous ticks, oldest first",
};
const TEAMMATE: LayoutEntry = LayoutEntry {
    name: "closest_teammate_to_goal",
    width: 2,
    description: "teammate nearest the attacked goal (own position if none)",
};
const STRATEGY: LayoutEntry = LayoutEntry {
    name: "strategy_position",
    width: 2,
    description: "assigned support position",
};
const DEFENDERS: LayoutEntry = LayoutEntry {
    name: "defenders",
    width: 4,
    description: "two opponents by id (nearest two if more); missing ones = (-2, -2)",
};

/// Observation layout of `kind`, in vector order. Points are egocentric and
/// divided by the field half-length.
pub fn layout(kind: PolicyKind) -> &'static [LayoutEntry] {
    match kind {
        PolicyKind::MidField => &[BALL, CAN_KICK, GOAL_CENTER, ALL_POSTS, SIDES, HISTORY],
        PolicyKind::BallDuel => &[BALL, CAN_KICK, TEAMMATE, ALL_POSTS, SIDES, HISTORY],
        PolicyKind::NearGoal => &[BALL, OPP_POSTS, HISTORY],
        PolicyKind::Positioning => &[BALL, STRATEGY, DEFENDERS, ALL_POSTS, SIDES, HISTORY],
    }
}

/// Normalized value used for absent defenders.
pub const MISSING_DEFENDER: f64 = -2.0;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PolicyIoError {
    #[error("POSITIONING needs a strategy position")]
    MissingStrategyPosition,
    #[error("unknown robot id {0}")]
    UnknownRobot(u8),
}

/// Egocentric position of the teammate closest to the attacked goal; ties go
/// to the lowest id. Falls back to the observer itself (the origin).
pub fn closest_teammate_to_goal(world: &WorldState, observer_id: u8, config: &SimConfig) -> Vec2 {
    let Some(me) = world.robot(observer_id) else {
        return Vec2::ZERO;
    };
    let goal = config.field.opponent_goal_center(me.team);
    let best = world
        .teammates(observer_id)
        .map(|r| (r.position().distance(goal), r.id, r.position()))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    match best {
        Some((_, _, p)) => to_egocentric(&me.pose, p),
        None => Vec2::ZERO,
    }
}

/// Appends the observation for `robot_id` to `out` (cleared first).
pub fn write_observation(
    spec: &PolicySpec,
    world: &WorldState,
    robot_id: u8,
    strategy_position: Option<Vec2>,
    config: &SimConfig,
    rng: &mut RngStreams,
    out: &mut Vec<f64>,
) -> Result<(), PolicyIoError> {
    let me = world.robot(robot_id).ok_or(PolicyIoError::UnknownRobot(robot_id))?;
    if spec.kind == PolicyKind::Positioning && strategy_position.is_none() {
        return Err(PolicyIoError::MissingStrategyPosition);
    }
    let field = &config.field;
    let scale = 1.0 / field.half_length();
    let pose = me.pose;
    out.clear();
    let push = |out: &mut Vec<f64>, p: Vec2| {
        out.push(p.x * scale);
        out.push(p.y * scale);
    };
    let push_global = |out: &mut Vec<f64>, p: Vec2| push(out, to_egocentric(&pose, p));

    let ball = observe_point(world, robot_id, world.ball.position, config, rng);
    let history = world
        .ball
        .history
        .map(|h| observe_point(world, robot_id, h, config, rng));

    for entry in layout(spec.kind) {
        match entry.name {
            "ball" => push(out, ball),
            "can_kick" => out.extend_from_slice(&can_kick_one_hot(world, robot_id, config)),
            "goal_center" => push_global(out, field.opponent_goal_center(me.team)),
            "goalposts" => {
                for p in field.goalposts() {
                    push_global(out, p);
                }
            }
            "opponent_goalposts" => {
                for p in field.opponent_goalposts(me.team) {
                    push_global(out, p);
                }
            }
            "field_sides" => {
                for d in field.side_distances(pose.position()) {
                    out.push(d * scale);
                }
            }
            "ball_history" => {
                for h in history {
                    push(out, h);
                }
            }
            "closest_teammate_to_goal" => push(out, closest_teammate_to_goal(world, robot_id, config)),
            "strategy_position" => push_global(out, strategy_position.unwrap_or_default()),
            "defenders" => {
                let mut opp: Vec<_> = world.opponents(robot_id).collect();
                if opp.len() > 2 {
                    opp.sort_by(|a, b| {
                        a.position()
                            .distance(pose.position())
                            .total_cmp(&b.position().distance(pose.position()))
                    });
                    opp.truncate(2);
                }
                opp.sort_by_key(|r| r.id);
                for k in 0..2 {
                    match opp.get(k) {
                        Some(r) => push_global(out, r.position()),
                        None => out.extend_from_slice(&[MISSING_DEFENDER, MISSING_DEFENDER]),
                    }
                }
            }
            other => unreachable!("layout entry {other}"),
        }
    }
    debug_assert_eq!(out.len(), spec.obs_dim);
    Ok(())
}

pub fn build_observation(
    spec: &PolicySpec,
    world: &WorldState,
    robot_id: u8,
    strategy_position: Option<Vec2>,
    config: &SimConfig,
    rng: &mut RngStreams,
) -> Result<Vec<f64>, PolicyIoError> {
    let mut out = Vec::with_capacity(spec.obs_dim);
    write_observation(spec, world, robot_id, strategy_position, config, rng, &mut out)?;
    Ok(out)
}

/// Per-robot decoder memory: the persistent MID_FIELD kick angle.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ActionDecoder {
    kick_angle: Option<f64>,
}

impl ActionDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Forgets the kick angle; the next MID_FIELD decode starts from the
    /// robot's heading.
    pub fn reset(&mut self) {
        self.kick_angle = None;
    }

    pub fn kick_angle(&self) -> Option<f64> {
        self.kick_angle
    }

    pub fn set_kick_angle(&mut self, angle: f64) {
        self.kick_angle = Some(normalize_angle(angle));
    }

    /// Maps a raw action (clipped to [−1, 1] first) to a skill command.
    pub fn decode(&mut self, spec: &PolicySpec, raw: &[f64], robot_pose: &Pose2D, config: &SimConfig) -> SkillCommand {
        let a = |i: usize| raw.get(i).copied().unwrap_or(0.0).clamp(-1.0, 1.0);
        let a = |i: usize| if a(i).is_nan() { 0.0 } else { a(i) };
        match spec.skill_binding {
            SkillBinding::KickAngle => {
                let current = self.kick_angle.unwrap_or(robot_pose.theta);
                let next = normalize_angle(current + a(0) * spec.delta_theta_clip);
                self.kick_angle = Some(next);
                SkillCommand::WalkAndKick { kick_angle: next }
            }
            SkillBinding::Velocity => velocity(a(0), a(1), a(2), config),
            SkillBinding::VelocityWithStand => {
                if a(3) > 0.0 {
                    SkillCommand::Stand
                } else {
                    velocity(a(0), a(1), a(2), config)
                }
            }
        }
    }
}

fn velocity(x: f64, y: f64, w: f64, config: &SimConfig) -> SkillCommand {
    let v = crate::geometry::Velocity {
        vx: x * config.max_linear_speed,
        vy: y * config.max_linear_speed,
        omega: w * config.max_angular_speed,
    }
    .clamped(config.max_linear_speed, config.max_angular_speed);
    SkillCommand::WalkAtVelocity {
        vx: v.vx,
        vy: v.vy,
        omega: v.omega,
    }
}

/// Stateless form of [`ActionDecoder::decode`].
pub fn decode_action(
    spec: &PolicySpec,
    raw: &[f64],
    robot_pose: &Pose2D,
    config: &SimConfig,
    decoder: &mut ActionDecoder,
) -> SkillCommand {
    decoder.decode(spec, raw, robot_pose, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BallState, RobotState, Team};
    use crate::sim::Fidelity;
    use proptest::prelude::*;

    fn robot(id: u8, team: Team, x: f64, y: f64, th: f64) -> RobotState {
        RobotState::new(id, team, Pose2D::new(x, y, th))
    }

    #[test]
    fn dims() {
        assert_eq!(PolicyKind::MidField.spec().obs_dim, 24);
        assert_eq!(PolicyKind::BallDuel.spec().obs_dim, 24);
        assert_eq!(PolicyKind::NearGoal.spec().obs_dim, 12);
        assert_eq!(PolicyKind::Positioning.spec().obs_dim, 26);
        assert_eq!(PolicyKind::MidField.spec().act_dim, 1);
        assert_eq!(PolicyKind::BallDuel.spec().act_dim, 3);
        assert_eq!(PolicyKind::NearGoal.spec().act_dim, 3);
        assert_eq!(PolicyKind::Positioning.spec().act_dim, 4);
    }

    #[test]
    fn midfield_ball_at_feet() {
        let cfg = SimConfig::default();
        let w = WorldState::new(
            vec![robot(0, Team::Home, 0.0, 0.0, 0.0)],
            BallState::at_rest(Vec2::new(0.25, 0.0)),
            0.05,
        );
        let mut rng = RngStreams::new(0);
        let o = build_observation(&PolicyKind::MidField.spec(), &w, 0, None, &cfg, &mut rng).unwrap();
        assert!((o[0] - 0.25 / 4.5).abs() < 1e-12 && o[1] == 0.0);
        assert_eq!(&o[2..4], &[0.0, 1.0]);
        assert!((o[4] - 1.0).abs() < 1e-12 && o[5].abs() < 1e-12);
        // stationary ball: history equals the current entry
        for k in 0..3 {
            assert_eq!(&o[18 + 2 * k..20 + 2 * k], &o[0..2]);
        }
    }

    #[test]
    fn positioning_requires_strategy() {
        let cfg = SimConfig::default();
        let w = WorldState::new(vec![robot(0, Team::Home, 0.0, 0.0, 0.0)], BallState::at_rest(Vec2::ZERO), 0.05);
        let mut rng = RngStreams::new(0);
        let err = build_observation(&PolicyKind::Positioning.spec(), &w, 0, None, &cfg, &mut rng).unwrap_err();
        assert_eq!(err, PolicyIoError::MissingStrategyPosition);
        let o = build_observation(
            &PolicyKind::Positioning.spec(),
            &w,
            0,
            Some(Vec2::new(-1.0, 1.0)),
            &cfg,
            &mut rng,
        )
        .unwrap();
        assert_eq!(&o[4..8], &[MISSING_DEFENDER; 4]);
    }

    #[test]
    fn decode_examples() {
        let cfg = SimConfig::default();
        let pose = Pose2D::new(0.0, 0.0, 0.3);
        let mut d = ActionDecoder::new();
        d.set_kick_angle(0.7);
        let cmd = d.decode(&PolicyKind::MidField.spec(), &[0.0], &pose, &cfg);
        assert_eq!(cmd, SkillCommand::WalkAndKick { kick_angle: 0.7 });
        let cmd = d.decode(&PolicyKind::MidField.spec(), &[5.0], &pose, &cfg);
        assert!(matches!(cmd, SkillCommand::WalkAndKick { kick_angle } if (kick_angle - 0.9).abs() < 1e-12));

        let cmd = ActionDecoder::new().decode(&PolicyKind::BallDuel.spec(), &[1.0, 0.0, 0.0], &pose, &cfg);
        assert_eq!(cmd, SkillCommand::WalkAtVelocity { vx: 0.30, vy: 0.0, omega: 0.0 });
        let cmd = ActionDecoder::new().decode(&PolicyKind::Positioning.spec(), &[1.0, 1.0, 1.0, 0.9], &pose, &cfg);
        assert_eq!(cmd, SkillCommand::Stand);
        let cmd = ActionDecoder::new().decode(&PolicyKind::Positioning.spec(), &[0.0, -1.0, 0.5, 0.0], &pose, &cfg);
        assert!(matches!(cmd, SkillCommand::WalkAtVelocity { .. }));
    }

    #[test]
    fn fresh_decoder_starts_from_heading() {
        let cfg = SimConfig::default();
        let mut d = ActionDecoder::new();
        let cmd = d.decode(&PolicyKind::MidField.spec(), &[0.0], &Pose2D::new(1.0, 1.0, -1.2), &cfg);
        assert_eq!(cmd, SkillCommand::WalkAndKick { kick_angle: -1.2 });
    }

    #[test]
    fn closest_teammate_cases() {
        let cfg = SimConfig::default();
        let w = WorldState::new(vec![robot(0, Team::Home, 0.0, 0.0, 0.0)], BallState::at_rest(Vec2::ZERO), 0.05);
        assert_eq!(closest_teammate_to_goal(&w, 0, &cfg), Vec2::ZERO);

        let w = WorldState::new(
            vec![robot(0, Team::Home, 0.0, 0.0, 0.0), robot(1, Team::Home, 1.0, 1.0, 0.0)],
            BallState::at_rest(Vec2::ZERO),
            0.05,
        );
        assert_eq!(closest_teammate_to_goal(&w, 0, &cfg), Vec2::new(1.0, 1.0));

        // Tie: both 1 m from the goal center.
        let w = WorldState::new(
            vec![
                robot(0, Team::Home, 0.0, 0.0, 0.0),
                robot(3, Team::Home, 3.5, 0.0, 0.0),
                robot(2, Team::Home, 4.5, 1.0, 0.0),
            ],
            BallState::at_rest(Vec2::ZERO),
            0.05,
        );
        assert_eq!(closest_teammate_to_goal(&w, 0, &cfg), Vec2::new(4.5, 1.0));
    }

    #[test]
    fn closest_teammate_matches_brute_force() {
        let cfg = SimConfig::default();
        let mates = [(-1.0, 2.0), (2.0, -2.5), (3.0, 1.5)];
        let mut robots = vec![robot(0, Team::Home, 0.5, 0.5, 1.0), robot(9, Team::Away, 4.0, 0.0, 0.0)];
        for (i, &(x, y)) in mates.iter().enumerate() {
            robots.push(robot(i as u8 + 1, Team::Home, x, y, 0.0));
        }
        let w = WorldState::new(robots, BallState::at_rest(Vec2::ZERO), 0.05);
        let goal = Vec2::new(4.5, 0.0);
        let mut best = (f64::INFINITY, Vec2::ZERO);
        for &(x, y) in &mates {
            let d = ((x - goal.x).powi(2) + (y - goal.y).powi(2)).sqrt();
            if d < best.0 {
                best = (d, Vec2::new(x, y));
            }
        }
        let me = w.robot(0).unwrap().pose;
        let got = from_ego(&me, closest_teammate_to_goal(&w, 0, &cfg));
        assert!(got.distance(best.1) < 1e-12);
    }

    fn from_ego(p: &Pose2D, v: Vec2) -> Vec2 {
        crate::geometry::from_egocentric(p, v)
    }

    /// Mirror map on observation vectors: negate y of point entries, swap
    /// left/right pairs of posts and field sides.
    fn reflect(kind: PolicyKind, obs: &[f64]) -> Vec<f64> {
        let mut out = Vec::new();
        let mut i = 0;
        for e in layout(kind) {
            let s = &obs[i..i + e.width];
            match e.name {
                "can_kick" => out.extend_from_slice(s),
                "field_sides" => out.extend_from_slice(&[s[1], s[0], s[2], s[3]]),
                "goalposts" => {
                    for k in [1, 0, 3, 2] {
                        out.extend_from_slice(&[s[2 * k], -s[2 * k + 1]]);
                    }
                }
                "opponent_goalposts" => {
                    for k in [1, 0] {
                        out.extend_from_slice(&[s[2 * k], -s[2 * k + 1]]);
                    }
                }
                "defenders" => {
                    for k in 0..2 {
                        if s[2 * k] == MISSING_DEFENDER && s[2 * k + 1] == MISSING_DEFENDER {
                            out.extend_from_slice(&[MISSING_DEFENDER, MISSING_DEFENDER]);
                        } else {
                            out.extend_from_slice(&[s[2 * k], -s[2 * k + 1]]);
                        }
                    }
                }
                _ => {
                    for k in 0..e.width / 2 {
                        out.extend_from_slice(&[s[2 * k], -s[2 * k + 1]]);
                    }
                }
            }
            i += e.width;
        }
        out
    }

    fn arb_world() -> impl Strategy<Value = WorldState> {
        (
            proptest::collection::vec((-4.5f64..4.5, -3.0f64..3.0, -3.1f64..3.1, any::<bool>()), 1..5),
            (-4.5f64..4.5, -3.0f64..3.0),
            proptest::collection::vec((-0.3f64..0.3, -0.3f64..0.3), 3),
        )
            .prop_map(|(rs, (bx, by), hist)| {
                let robots = rs
                    .iter()
                    .enumerate()
                    .map(|(i, &(x, y, t, home))| {
                        robot(i as u8, if i == 0 || home { Team::Home } else { Team::Away }, x, y, t)
                    })
                    .collect();
                let mut ball = BallState::at_rest(Vec2::new(bx, by));
                for (k, (dx, dy)) in hist.into_iter().enumerate() {
                    ball.history[k] = ball.position + Vec2::new(dx, dy);
                }
                WorldState::new(robots, ball, 0.05)
            })
    }

    proptest! {
        #[test]
        fn observations_have_declared_length_and_are_finite(w in arb_world(), high in any::<bool>(), seed in any::<u64>()) {
            let f = if high { Fidelity::High } else { Fidelity::Low };
            let cfg = SimConfig::default().with_fidelity(f);
            let mut rng = RngStreams::new(seed);
            for kind in PolicyKind::ALL {
                let spec = kind.spec();
                let o = build_observation(&spec, &w, 0, Some(Vec2::new(-1.0, 0.5)), &cfg, &mut rng).unwrap();
                prop_assert_eq!(o.len(), spec.obs_dim);
                prop_assert!(o.iter().all(|v| v.is_finite()));
            }
        }

        #[test]
        fn reflection_symmetry(w in arb_world()) {
            let cfg = SimConfig::default();
            let mut rng = RngStreams::new(0);
            let rw = w.reflected();
            let sp = Vec2::new(-1.0, 0.5);
            for kind in PolicyKind::ALL {
                let spec = kind.spec();
                let o = build_observation(&spec, &w, 0, Some(sp), &cfg, &mut rng).unwrap();
                let r = build_observation(&spec, &rw, 0, Some(sp.reflect_y()), &cfg, &mut rng).unwrap();
                let expected = reflect(kind, &o);
                for (a, b) in r.iter().zip(&expected) {
                    prop_assert!((a - b).abs() < 1e-9, "{kind}: {r:?} vs {expected:?}");
                }
            }
        }

        #[test]
        fn decode_is_total(raw in proptest::collection::vec(-1.0f64..=1.0, 4), th in -3.1f64..3.1, steps in 1usize..20) {
            let cfg = SimConfig::default();
            let pose = Pose2D::new(0.0, 0.0, th);
            for kind in PolicyKind::ALL {
                let spec = kind.spec();
                let mut d = ActionDecoder::new();
                let mut prev: Option<f64> = None;
                for _ in 0..steps {
                    let cmd = d.decode(&spec, &raw[..spec.act_dim], &pose, &cfg);
                    prop_assert!(cmd.is_finite());
                    match cmd {
                        SkillCommand::WalkAtVelocity { vx, vy, omega } => {
                            prop_assert!(vx.hypot(vy) <= cfg.max_linear_speed + 1e-12);
                            prop_assert!(omega.abs() <= cfg.max_angular_speed);
                        }
                        SkillCommand::WalkAndKick { kick_angle } => {
                            if let Some(p) = prev {
                                let change = crate::geometry::angle_diff(kick_angle, p).abs();
                                prop_assert!(change <= spec.delta_theta_clip + 1e-12);
                            }
                            prev = Some(kick_angle);
                        }
                        _ => {}
                    }
                }
            }
        }
    }
}
