//! Low-level skills that the learned policies parameterize: walking at a
//! commanded velocity, walking to a point with a tangent-detour planner, and
//! an approach-and-kick skill.

use serde::{Deserialize, Serialize};

use crate::geometry::{angle_diff, to_egocentric, Vec2, Velocity, WorldState};
use crate::sim::SimConfig;
use crate::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SkillCommand {
    /// Robot-frame velocity.
    WalkAtVelocity { vx: f64, vy: f64, omega: f64 },
    /// Global target and facing direction.
    WalkToPoint { target: Vec2, face: f64 },
    /// Global kick direction.
    WalkAndKick { kick_angle: f64 },
    Stand,
}

impl SkillCommand {
    pub fn is_finite(&self) -> bool {
        match *self {
            SkillCommand::WalkAtVelocity { vx, vy, omega } => vx.is_finite() && vy.is_finite() && omega.is_finite(),
            SkillCommand::WalkToPoint { target, face } => target.is_finite() && face.is_finite(),
            SkillCommand::WalkAndKick { kick_angle } => kick_angle.is_finite(),
            SkillCommand::Stand => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkillParams {
    /// Heading error below which a kick may fire (rad).
    pub align_tolerance: f64,
    /// Approach point sits this fraction of `kick_range` in front of the
    /// robot's front face, behind the ball.
    pub approach_fraction: f64,
    /// Inside this distance walk-to-point decelerates linearly.
    pub arrival_radius: f64,
    /// Inflation of other robots' footprints for the detour planner.
    pub obstacle_inflation: f64,
    /// Clearance kept from the ball while circling to the approach point.
    pub ball_clearance: f64,
    /// Proportional gain of the heading controller (1/s).
    pub heading_gain: f64,
}

impl Default for SkillParams {
    fn default() -> Self {
        Self {
            align_tolerance: 0.05,
            approach_fraction: 0.8,
            arrival_radius: 0.10,
            obstacle_inflation: 0.25,
            ball_clearance: 0.30,
            heading_gain: 4.0,
        }
    }
}

impl SkillParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (key, v) in [
            ("align_tolerance", self.align_tolerance),
            ("approach_fraction", self.approach_fraction),
            ("arrival_radius", self.arrival_radius),
            ("obstacle_inflation", self.obstacle_inflation),
            ("ball_clearance", self.ball_clearance),
            ("heading_gain", self.heading_gain),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::invalid(key, "must be finite and > 0"));
            }
        }
        Ok(())
    }
}

pub(crate) fn can_kick_at(world: &WorldState, idx: usize, config: &SimConfig) -> bool {
    let r = &world.robots[idx];
    if !r.upright {
        return false;
    }
    let local = to_egocentric(&r.pose, world.ball.position);
    if local.x <= 0.0 {
        return false;
    }
    let face_gap = local.x - config.field.robot_half_length;
    face_gap <= config.kick_range && local.y.atan2(local.x).abs() <= config.kick_half_angle
}

/// Whether the ball is within kick range of the robot's front face and
/// inside the kick cone.
pub fn can_kick(world: &WorldState, robot_id: u8, config: &SimConfig) -> bool {
    world
        .robot_index(robot_id)
        .is_some_and(|i| can_kick_at(world, i, config))
}

/// `[no, yes]` encoding of [`can_kick`].
pub fn can_kick_one_hot(world: &WorldState, robot_id: u8, config: &SimConfig) -> [f64; 2] {
    if can_kick(world, robot_id, config) {
        [0.0, 1.0]
    } else {
        [1.0, 0.0]
    }
}

fn circumradius(config: &SimConfig) -> f64 {
    config.field.robot_half_length.hypot(config.field.robot_half_width)
}

/// Direction to steer from `p` toward `target`, detouring via the tangent of
/// the nearest disk that blocks the straight segment.
fn steer(p: Vec2, target: Vec2, disks: &[(Vec2, f64)]) -> Vec2 {
    let to_target = target - p;
    let len = to_target.norm();
    if len == 0.0 {
        return Vec2::ZERO;
    }
    let dir = to_target * (1.0 / len);
    let mut blocking: Option<(f64, Vec2, f64)> = None;
    for &(c, radius) in disks {
        // A target inside the disk cannot be reached around it.
        if c.distance(target) <= radius {
            continue;
        }
        let t = (c - p).dot(dir).clamp(0.0, len);
        if (p + dir * t).distance(c) >= radius {
            continue;
        }
        let d = p.distance(c);
        if blocking.is_none_or(|(best, _, _)| d < best) {
            blocking = Some((d, c, radius));
        }
    }
    let Some((d, c, radius)) = blocking else {
        return dir;
    };
    let to_c = c - p;
    // Turn toward whichever side of the obstacle the target lies on.
    let side = if to_c.cross(to_target) >= 0.0 { 1.0 } else { -1.0 };
    if d <= radius {
        let out = (p - c).normalized();
        let tangent = out.perp() * -side;
        return (out + tangent).normalized();
    }
    let half = (radius / d).asin();
    Vec2::from_angle(to_c.angle() + side * half)
}

fn walk_with_obstacles(
    world: &WorldState,
    idx: usize,
    target: Vec2,
    face: f64,
    config: &SimConfig,
    extra: Option<(Vec2, f64)>,
) -> Velocity {
    let r = &world.robots[idx];
    let p = r.position();
    let dist = p.distance(target);
    let sp = &config.skills;
    let speed = if dist > sp.arrival_radius {
        config.max_linear_speed
    } else {
        config.max_linear_speed * dist / sp.arrival_radius
    };
    let inflate = circumradius(config) + sp.obstacle_inflation;
    let mut disks: Vec<(Vec2, f64)> = world
        .robots
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != idx)
        .map(|(_, o)| (o.position(), inflate))
        .collect();
    disks.extend(extra);
    let dir = steer(p, target, &disks);
    let local = (dir * speed).rotate(-r.pose.theta);
    let omega = (sp.heading_gain * angle_diff(face, r.pose.theta))
        .clamp(-config.max_angular_speed, config.max_angular_speed);
    Velocity {
        vx: local.x,
        vy: local.y,
        omega,
    }
    .clamped(config.max_linear_speed, config.max_angular_speed)
}

pub(crate) fn walk_to_point_at(world: &WorldState, idx: usize, target: Vec2, face: f64, config: &SimConfig) -> Velocity {
    walk_with_obstacles(world, idx, target, face, config, None)
}

/// Robot-frame velocity that drives toward `target` (global) while turning to
/// `face`. Full speed outside the arrival radius, linear slow-down inside it.
pub fn walk_to_point(world: &WorldState, robot_id: u8, target: Vec2, face: f64, config: &SimConfig) -> Velocity {
    match world.robot_index(robot_id) {
        Some(i) => walk_to_point_at(world, i, target, face, config),
        None => Velocity::ZERO,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KickResolution {
    Kick { angle: f64 },
    Walk(Velocity),
}

/// Global position the robot center walks to before kicking along `kick_angle`.
pub fn kick_approach_point(world: &WorldState, kick_angle: f64, config: &SimConfig) -> Vec2 {
    let back = config.field.robot_half_length + config.skills.approach_fraction * config.kick_range;
    world.ball.position - Vec2::from_angle(kick_angle) * back
}

pub(crate) fn walk_and_kick_at(world: &WorldState, idx: usize, kick_angle: f64, config: &SimConfig) -> KickResolution {
    let r = &world.robots[idx];
    if can_kick_at(world, idx, config) && angle_diff(r.pose.theta, kick_angle).abs() <= config.skills.align_tolerance {
        return KickResolution::Kick { angle: kick_angle };
    }
    let target = kick_approach_point(world, kick_angle, config);
    let ball_disk = (world.ball.position, config.skills.ball_clearance);
    KickResolution::Walk(walk_with_obstacles(world, idx, target, kick_angle, config, Some(ball_disk)))
}

/// Kicks along `kick_angle` when in range and aligned; otherwise walks around
/// the ball to the approach point while turning toward the kick direction.
pub fn walk_and_kick(world: &WorldState, robot_id: u8, kick_angle: f64, config: &SimConfig) -> KickResolution {
    match world.robot_index(robot_id) {
        Some(i) => walk_and_kick_at(world, i, kick_angle, config),
        None => KickResolution::Walk(Velocity::ZERO),
    }
}

/// Turns a command into a velocity target and an optional kick angle.
pub(crate) fn resolve_at(world: &WorldState, idx: usize, cmd: &SkillCommand, config: &SimConfig) -> (Velocity, Option<f64>) {
    match *cmd {
        SkillCommand::Stand => (Velocity::ZERO, None),
        SkillCommand::WalkAtVelocity { vx, vy, omega } => (
            Velocity { vx, vy, omega }.clamped(config.max_linear_speed, config.max_angular_speed),
            None,
        ),
        SkillCommand::WalkToPoint { target, face } => (walk_to_point_at(world, idx, target, face, config), None),
        SkillCommand::WalkAndKick { kick_angle } => match walk_and_kick_at(world, idx, kick_angle, config) {
            KickResolution::Kick { angle } => (Velocity::ZERO, Some(angle)),
            KickResolution::Walk(v) => (v, None),
        },
    }
}
