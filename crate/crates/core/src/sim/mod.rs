//! Stepped two-fidelity simulation of robots and ball.
//!
//! The LOW profile is purely kinematic: rectangles that track their commanded
//! velocity instantly and a ball that decelerates at a constant rate. The HIGH
//! profile layers actuation lag, velocity and kick noise, noisy ball sensing
//! and speed-dependent falls on top of the same model.

mod collision;
mod rng;

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::geometry::{to_egocentric, BallState, FieldGeometry, RobotState, Team, Vec2, Velocity, WorldState};
use crate::skills::{self, SkillCommand, SkillParams};
use crate::ConfigError;

pub use collision::{ball_robot_penetration, robot_robot_penetration};
pub use rng::RngStreams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Fidelity {
    Low,
    High,
}

impl std::fmt::Display for Fidelity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Fidelity::Low => "LOW",
            Fidelity::High => "HIGH",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FidelityProfile {
    pub name: Fidelity,
    pub actuation_lag_tau: f64,
    pub velocity_noise_std: f64,
    pub kick_angle_noise_std: f64,
    pub kick_speed_noise_frac: f64,
    pub fall_prob_per_step_at_max_speed: f64,
    pub obs_ball_noise_std: f64,
    pub contact_restitution: f64,
}

impl FidelityProfile {
    pub fn low() -> Self {
        Self {
            name: Fidelity::Low,
            actuation_lag_tau: 0.0,
            velocity_noise_std: 0.0,
            kick_angle_noise_std: 0.0,
            kick_speed_noise_frac: 0.0,
            fall_prob_per_step_at_max_speed: 0.0,
            obs_ball_noise_std: 0.0,
            contact_restitution: 0.5,
        }
    }

    pub fn high() -> Self {
        Self {
            name: Fidelity::High,
            actuation_lag_tau: 0.3,
            velocity_noise_std: 0.03,
            kick_angle_noise_std: 0.15,
            kick_speed_noise_frac: 0.2,
            fall_prob_per_step_at_max_speed: 0.002,
            obs_ball_noise_std: 0.05,
            contact_restitution: 0.5,
        }
    }

    pub fn for_fidelity(f: Fidelity) -> Self {
        match f {
            Fidelity::Low => Self::low(),
            Fidelity::High => Self::high(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fields = [
            ("actuation_lag_tau", self.actuation_lag_tau),
            ("velocity_noise_std", self.velocity_noise_std),
            ("kick_angle_noise_std", self.kick_angle_noise_std),
            ("kick_speed_noise_frac", self.kick_speed_noise_frac),
            ("fall_prob_per_step_at_max_speed", self.fall_prob_per_step_at_max_speed),
            ("obs_ball_noise_std", self.obs_ball_noise_std),
            ("contact_restitution", self.contact_restitution),
        ];
        for (key, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ConfigError::invalid(key, "must be finite and >= 0"));
            }
            if self.name == Fidelity::Low && key != "contact_restitution" && v != 0.0 {
                return Err(ConfigError::invalid(key, "must be 0 for the LOW profile"));
            }
        }
        if self.fall_prob_per_step_at_max_speed > 1.0 {
            return Err(ConfigError::invalid("fall_prob_per_step_at_max_speed", "must be <= 1"));
        }
        if self.contact_restitution > 1.0 {
            return Err(ConfigError::invalid("contact_restitution", "must be <= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    pub max_linear_speed: f64,
    pub max_angular_speed: f64,
    pub ball_friction_decel: f64,
    pub kick_speed: f64,
    /// Measured from the robot's front face.
    pub kick_range: f64,
    pub kick_half_angle: f64,
    pub fall_recovery_time: f64,
    pub seed: u64,
    pub fidelity: FidelityProfile,
    pub field: FieldGeometry,
    pub skills: SkillParams,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            max_linear_speed: 0.30,
            max_angular_speed: 1.5,
            ball_friction_decel: 0.4,
            kick_speed: 2.5,
            kick_range: 0.25,
            kick_half_angle: 0.5,
            fall_recovery_time: 3.0,
            seed: 0,
            fidelity: FidelityProfile::low(),
            field: FieldGeometry::default(),
            skills: SkillParams::default(),
        }
    }
}

impl SimConfig {
    /// Switches to the default profile of `f`; a profile already named `f`
    /// is kept, so tuned noise levels survive.
    pub fn with_fidelity(mut self, f: Fidelity) -> Self {
        if self.fidelity.name != f {
            self.fidelity = FidelityProfile::for_fidelity(f);
        }
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("dt", self.dt),
            ("max_linear_speed", self.max_linear_speed),
            ("max_angular_speed", self.max_angular_speed),
            ("ball_friction_decel", self.ball_friction_decel),
            ("kick_speed", self.kick_speed),
            ("kick_range", self.kick_range),
            ("kick_half_angle", self.kick_half_angle),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::invalid(key, "must be finite and > 0"));
            }
        }
        if !(self.fall_recovery_time.is_finite() && self.fall_recovery_time >= 0.0) {
            return Err(ConfigError::invalid("fall_recovery_time", "must be finite and >= 0"));
        }
        if self.kick_range <= self.field.robot_half_length {
            return Err(ConfigError::invalid("kick_range", "must exceed field.robot_half_length"));
        }
        self.fidelity.validate().map_err(|e| e.nest("fidelity"))?;
        self.field
            .validate()
            .map_err(|k| ConfigError::invalid(k, "out of range").nest("field"))?;
        self.skills.validate().map_err(|e| e.nest("skills"))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SimEventKind {
    /// The home team scored (ball entered the goal at +x).
    GoalHome,
    /// The away team scored (ball entered the goal at −x).
    GoalAway,
    OutOfBounds,
    Fall,
    KickExecuted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub kind: SimEventKind,
    pub tick: u64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub detail: BTreeMap<String, f64>,
}

impl SimEvent {
    fn new(kind: SimEventKind, tick: u64) -> Self {
        Self {
            kind,
            tick,
            detail: BTreeMap::new(),
        }
    }

    fn with(mut self, key: &str, v: f64) -> Self {
        self.detail.insert(key.to_owned(), v);
        self
    }

    pub fn is_goal(&self) -> bool {
        matches!(self.kind, SimEventKind::GoalHome | SimEventKind::GoalAway)
    }

    /// True for a goal scored by `team`.
    pub fn is_goal_for(&self, team: Team) -> bool {
        matches!(
            (self.kind, team),
            (SimEventKind::GoalHome, Team::Home) | (SimEventKind::GoalAway, Team::Away)
        )
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SimError {
    #[error("robot {0} cannot kick: ball out of range")]
    KickOutOfRange(u8),
    #[error("unknown robot id {0}")]
    UnknownRobot(u8),
    #[error("expected {expected} commands, got {got}")]
    CommandCount { expected: usize, got: usize },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepOutcome {
    pub events: Vec<SimEvent>,
    /// Robots whose command was non-finite and replaced by STAND.
    pub rejected: Vec<u8>,
    /// Whether any robot touched the ball during collision resolution.
    pub ball_contact: bool,
}

impl StepOutcome {
    pub fn has(&self, kind: SimEventKind) -> bool {
        self.events.iter().any(|e| e.kind == kind)
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Sets the ball moving along `desired_angle` (global) at kick speed, with
/// angle and speed noise under HIGH fidelity.
pub fn resolve_kick(
    world: &WorldState,
    kicker_id: u8,
    desired_angle: f64,
    config: &SimConfig,
    rng: &mut RngStreams,
) -> Result<(BallState, SimEvent), SimError> {
    let idx = world
        .robot_index(kicker_id)
        .ok_or(SimError::UnknownRobot(kicker_id))?;
    if !skills::can_kick_at(world, idx, config) {
        return Err(SimError::KickOutOfRange(kicker_id));
    }
    let f = &config.fidelity;
    let ball_rng = rng.ball();
    let mut angle = desired_angle;
    if f.kick_angle_noise_std > 0.0 {
        angle += f.kick_angle_noise_std * gaussian(ball_rng);
    }
    let mut speed = config.kick_speed;
    if f.kick_speed_noise_frac > 0.0 {
        speed *= (1.0 + f.kick_speed_noise_frac * gaussian(ball_rng)).max(0.0);
    }
    let mut ball = world.ball;
    ball.velocity = Vec2::from_angle(angle) * speed;
    let ev = SimEvent::new(SimEventKind::KickExecuted, world.tick)
        .with("robot", kicker_id as f64)
        .with("angle", crate::geometry::normalize_angle(angle))
        .with("speed", speed);
    Ok((ball, ev))
}

/// Draws whether `robot` falls this tick. Probability scales linearly with
/// planar speed relative to the speed limit; never fires on the LOW profile.
pub fn check_fall(robot: &RobotState, config: &SimConfig, rng: &mut RngStreams) -> bool {
    let p_max = config.fidelity.fall_prob_per_step_at_max_speed;
    if p_max <= 0.0 || !robot.upright {
        return false;
    }
    let frac = (robot.velocity.linear().norm() / config.max_linear_speed).min(1.0);
    let p = p_max * frac;
    if p <= 0.0 {
        return false;
    }
    rng.motion(robot.id).random::<f64>() < p
}

/// Egocentric ball position as sensed by `observer_id`.
pub fn observe_ball(world: &WorldState, observer_id: u8, config: &SimConfig, rng: &mut RngStreams) -> Vec2 {
    observe_point(world, observer_id, world.ball.position, config, rng)
}

/// Egocentric, noise-corrupted view of a global ball position (used for the
/// current ball and its recent history).
pub fn observe_point(
    world: &WorldState,
    observer_id: u8,
    global: Vec2,
    config: &SimConfig,
    rng: &mut RngStreams,
) -> Vec2 {
    let Some(obs) = world.robot(observer_id) else {
        return Vec2::ZERO;
    };
    let local = to_egocentric(&obs.pose, global);
    let sigma = config.fidelity.obs_ball_noise_std;
    if sigma <= 0.0 {
        return local;
    }
    let r = rng.sensing(observer_id);
    local + Vec2::new(sigma * gaussian(r), sigma * gaussian(r))
}

/// Advances the world by one tick. `commands` is aligned with
/// `world.robots`; commands for fallen robots are ignored.
pub fn step(
    world: &mut WorldState,
    commands: &[SkillCommand],
    config: &SimConfig,
    rng: &mut RngStreams,
) -> Result<StepOutcome, SimError> {
    if commands.len() != world.robots.len() {
        return Err(SimError::CommandCount {
            expected: world.robots.len(),
            got: commands.len(),
        });
    }
    let dt = config.dt;
    let mut out = StepOutcome::default();
    world.tick += 1;
    let tick = world.tick;

    // Resolve every command against the pre-step world.
    let n = world.robots.len();
    let mut targets = vec![Velocity::ZERO; n];
    let mut kicks: Vec<Option<f64>> = vec![None; n];
    for i in 0..n {
        if !world.robots[i].upright {
            continue;
        }
        let mut cmd = commands[i];
        if !cmd.is_finite() {
            out.rejected.push(world.robots[i].id);
            cmd = SkillCommand::Stand;
        }
        let (v, kick) = skills::resolve_at(world, i, &cmd, config);
        targets[i] = v;
        kicks[i] = kick;
    }

    for i in 0..n {
        if let Some(angle) = kicks[i] {
            let id = world.robots[i].id;
            if let Ok((ball, ev)) = resolve_kick(world, id, angle, config, rng) {
                world.ball = ball;
                let mut ev = ev;
                ev.tick = tick;
                out.events.push(ev);
            }
        }
    }

    let f = config.fidelity;
    let alpha = if f.actuation_lag_tau > 0.0 {
        1.0 - (-dt / f.actuation_lag_tau).exp()
    } else {
        1.0
    };
    for i in 0..n {
        let id = world.robots[i].id;
        let r = &mut world.robots[i];
        if !r.upright {
            r.velocity = Velocity::ZERO;
            r.recovery_left -= dt;
            if r.recovery_left <= 1e-9 {
                r.recovery_left = 0.0;
                r.upright = true;
            }
            continue;
        }
        let target = targets[i];
        let mut v = Velocity {
            vx: r.velocity.vx + (target.vx - r.velocity.vx) * alpha,
            vy: r.velocity.vy + (target.vy - r.velocity.vy) * alpha,
            omega: r.velocity.omega + (target.omega - r.velocity.omega) * alpha,
        };
        let walking = target.vx != 0.0 || target.vy != 0.0 || target.omega != 0.0;
        if f.velocity_noise_std > 0.0 && walking {
            let m = rng.motion(id);
            v.vx += f.velocity_noise_std * gaussian(m);
            v.vy += f.velocity_noise_std * gaussian(m);
        }
        r.velocity = v.clamped(config.max_linear_speed, config.max_angular_speed);
        let p = r.position() + r.velocity.linear().rotate(r.pose.theta) * dt;
        r.pose = crate::geometry::Pose2D::new(p.x, p.y, r.pose.theta + r.velocity.omega * dt);
        if check_fall(r, config, rng) {
            let r = &mut world.robots[i];
            r.upright = false;
            r.velocity = Velocity::ZERO;
            r.recovery_left = config.fall_recovery_time;
            out.events.push(SimEvent::new(SimEventKind::Fall, tick).with("robot", id as f64));
        }
    }

    // Ball: constant deceleration, integrated in closed form over the tick.
    let ball = &mut world.ball;
    ball.push_history();
    let start = ball.position;
    let speed = ball.speed();
    if speed > 0.0 {
        let a = config.ball_friction_decel;
        let t = (speed / a).min(dt);
        let travel = speed * t - 0.5 * a * t * t;
        let dir = ball.velocity * (1.0 / speed);
        ball.position += dir * travel;
        let new_speed = (speed - a * dt).max(0.0);
        ball.velocity = dir * new_speed;
    }

    out.ball_contact = collision::resolve(world, config);

    let field = &config.field;
    for r in &mut world.robots {
        let p = field.clamp_to_apron(r.position());
        r.pose.x = p.x;
        r.pose.y = p.y;
    }
    let clamped = field.clamp_to_apron(world.ball.position);
    if clamped.x != world.ball.position.x {
        world.ball.velocity.x = 0.0;
    }
    if clamped.y != world.ball.position.y {
        world.ball.velocity.y = 0.0;
    }
    world.ball.position = clamped;

    if let Some(ev) = boundary_event(field, start, world.ball.position, tick) {
        out.events.push(ev);
    }
    Ok(out)
}

/// Goal or out-of-bounds event for a ball moving from `p0` to `p1`, found by
/// intersecting the motion segment with the boundary lines. Goals win over
/// out-of-bounds when both lines are crossed in one tick.
pub fn boundary_event(field: &FieldGeometry, p0: Vec2, p1: Vec2, tick: u64) -> Option<SimEvent> {
    if !field.in_field(p0) || field.in_field(p1) {
        return None;
    }
    let hl = field.half_length();
    let hg = field.goal_width * 0.5;
    let hw = field.half_width();
    for (sign, kind) in [(1.0, SimEventKind::GoalHome), (-1.0, SimEventKind::GoalAway)] {
        let x0 = sign * p0.x;
        let x1 = sign * p1.x;
        if x0 < hl && x1 >= hl {
            let t = (hl - x0) / (x1 - x0);
            let y = p0.y + t * (p1.y - p0.y);
            if y.abs() <= hg {
                return Some(SimEvent::new(kind, tick).with("y", y));
            }
        }
    }
    let mut ev = SimEvent::new(SimEventKind::OutOfBounds, tick);
    if p1.y.abs() > hw {
        ev = ev.with("side", p1.y.signum());
    } else {
        ev = ev.with("end", p1.x.signum());
    }
    Some(ev)
}

/// Owns a world, its configuration and RNG streams.
#[derive(Debug, Clone)]
pub struct Simulator {
    pub world: WorldState,
    pub config: SimConfig,
    rng: RngStreams,
}

impl Simulator {
    pub fn new(mut world: WorldState, config: SimConfig) -> Self {
        world.dt = config.dt;
        Self {
            world,
            rng: RngStreams::new(config.seed),
            config,
        }
    }

    pub fn step(&mut self, commands: &[SkillCommand]) -> Result<StepOutcome, SimError> {
        step(&mut self.world, commands, &self.config, &mut self.rng)
    }

    pub fn observe_ball(&mut self, observer_id: u8) -> Vec2 {
        observe_ball(&self.world, observer_id, &self.config, &mut self.rng)
    }

    pub fn rng_mut(&mut self) -> &mut RngStreams {
        &mut self.rng
    }

    /// Splits the borrow so observation builders can read the world while
    /// drawing sensor noise.
    pub fn parts_mut(&mut self) -> (&WorldState, &SimConfig, &mut RngStreams) {
        (&self.world, &self.config, &mut self.rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Pose2D;

    fn one_robot_world(ball: Vec2) -> WorldState {
        WorldState::new(
            vec![RobotState::new(0, Team::Home, Pose2D::new(0.0, 0.0, 0.0))],
            BallState::at_rest(ball),
            0.05,
        )
    }

    #[test]
    fn rest_state_only_advances_tick() {
        let cfg = SimConfig::default();
        let mut rng = RngStreams::new(1);
        let mut w = one_robot_world(Vec2::new(2.0, 1.0));
        let before = w.clone();
        let out = step(&mut w, &[SkillCommand::Stand], &cfg, &mut rng).unwrap();
        assert!(out.events.is_empty());
        assert_eq!(w.tick, before.tick + 1);
        let mut w2 = w.clone();
        w2.tick = before.tick;
        assert_eq!(w2, before);
    }

    #[test]
    fn ball_friction_one_tick() {
        let cfg = SimConfig::default();
        let mut rng = RngStreams::new(1);
        let mut w = one_robot_world(Vec2::new(-2.0, 0.0));
        w.ball.velocity = Vec2::new(-1.0, 0.0);
        step(&mut w, &[SkillCommand::Stand], &cfg, &mut rng).unwrap();
        assert!((w.ball.speed() - 0.98).abs() < 1e-12);
        // closed form: 1.0 * 0.05 − 0.5 * 0.4 * 0.05²
        let travel = 0.05 - 0.5 * 0.4 * 0.0025;
        assert!((w.ball.position.x - (-2.0 - travel)).abs() < 1e-12);
        assert_eq!(w.ball.history[2], Vec2::new(-2.0, 0.0));
    }

    #[test]
    fn roll_distance_matches_closed_form() {
        let cfg = SimConfig::default();
        let mut rng = RngStreams::new(1);
        let mut w = one_robot_world(Vec2::new(-3.0, 2.0));
        w.ball.velocity = Vec2::new(0.0, -1.0);
        let start = w.ball.position;
        for _ in 0..200 {
            step(&mut w, &[SkillCommand::Stand], &cfg, &mut rng).unwrap();
        }
        assert_eq!(w.ball.speed(), 0.0);
        let d = w.ball.position.distance(start);
        let expected = 1.0 / (2.0 * 0.4);
        assert!((d - expected).abs() / expected < 0.02, "{d}");
    }

    #[test]
    fn kick_out_of_range() {
        let cfg = SimConfig::default();
        let mut rng = RngStreams::new(1);
        let w = one_robot_world(Vec2::new(2.0, 0.0));
        assert_eq!(
            resolve_kick(&w, 0, 0.0, &cfg, &mut rng).unwrap_err(),
            SimError::KickOutOfRange(0)
        );
    }

    #[test]
    fn low_kick_is_exact() {
        let cfg = SimConfig::default();
        let mut rng = RngStreams::new(1);
        let w = one_robot_world(Vec2::new(0.25, 0.0));
        let (ball, ev) = resolve_kick(&w, 0, 0.0, &cfg, &mut rng).unwrap();
        assert_eq!(ball.velocity, Vec2::new(cfg.kick_speed, 0.0));
        assert_eq!(ev.kind, SimEventKind::KickExecuted);
    }

    #[test]
    fn high_kick_angle_spread() {
        let mut cfg = SimConfig::default().with_fidelity(Fidelity::High);
        cfg.fidelity.kick_angle_noise_std = 0.1;
        let mut rng = RngStreams::new(7);
        let w = one_robot_world(Vec2::new(0.25, 0.0));
        let n = 10_000;
        let angles: Vec<f64> = (0..n)
            .map(|_| resolve_kick(&w, 0, 0.0, &cfg, &mut rng).unwrap().0.velocity.angle())
            .collect();
        let mean = angles.iter().sum::<f64>() / n as f64;
        let var = angles.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sd = var.sqrt();
        assert!((0.097..=0.103).contains(&sd), "{sd}");
    }

    #[test]
    fn falls() {
        let low = SimConfig::default();
        let mut rng = RngStreams::new(3);
        let mut r = RobotState::new(0, Team::Home, Pose2D::default());
        r.velocity.vx = low.max_linear_speed;
        assert!((0..1000).all(|_| !check_fall(&r, &low, &mut rng)));

        let high = SimConfig::default().with_fidelity(Fidelity::High);
        let still = RobotState::new(0, Team::Home, Pose2D::default());
        assert!((0..1000).all(|_| !check_fall(&still, &high, &mut rng)));
    }

    /// Binomial oracle: mean n·p, sd sqrt(n·p·(1−p)); accept ±4.5 sd.
    fn binomial_window(n: f64, p: f64) -> (f64, f64) {
        let mean = n * p;
        let sd = (n * p * (1.0 - p)).sqrt();
        (mean - 4.5 * sd, mean + 4.5 * sd)
    }

    fn count_falls(p: f64, seed: u64) -> usize {
        let mut cfg = SimConfig::default().with_fidelity(Fidelity::High);
        cfg.fidelity.fall_prob_per_step_at_max_speed = p;
        let mut rng = RngStreams::new(seed);
        let mut r = RobotState::new(0, Team::Home, Pose2D::default());
        r.velocity.vx = cfg.max_linear_speed;
        (0..10_000).filter(|_| check_fall(&r, &cfg, &mut rng)).count()
    }

    #[test]
    fn fall_counts_follow_binomial() {
        let (lo, hi) = binomial_window(10_000.0, 0.002);
        let c = count_falls(0.002, 11) as f64;
        assert!(c >= lo && c <= hi, "{c} not in [{lo}, {hi}]");
        // The [140, 260] window corresponds to p = 0.02.
        let c = count_falls(0.02, 11);
        assert!((140..=260).contains(&c), "{c}");
    }

    #[test]
    fn observation_noise_statistics() {
        let cfg = SimConfig::default().with_fidelity(Fidelity::High);
        let mut rng = RngStreams::new(5);
        let w = one_robot_world(Vec2::new(1.0, 0.5));
        let truth = to_egocentric(&w.robots[0].pose, w.ball.position);
        let n = 10_000;
        let mut sum = Vec2::ZERO;
        let mut sq = 0.0;
        for _ in 0..n {
            let o = observe_ball(&w, 0, &cfg, &mut rng);
            sum += o;
            sq += (o - truth).norm_sq();
        }
        let rms = (sq / n as f64).sqrt();
        assert!((0.068..=0.073).contains(&rms), "{rms}");
        let mean = sum * (1.0 / n as f64);
        let tol = 3.0 * 0.05 / (n as f64).sqrt();
        assert!((mean.x - truth.x).abs() < tol && (mean.y - truth.y).abs() < tol);

        let low = SimConfig::default();
        assert_eq!(observe_ball(&w, 0, &low, &mut rng), truth);
    }

    #[test]
    fn goal_detected_between_ticks() {
        let f = FieldGeometry::default();
        let ev = boundary_event(&f, Vec2::new(4.45, 0.1), Vec2::new(4.6, 0.2), 3).unwrap();
        assert_eq!(ev.kind, SimEventKind::GoalHome);
        let ev = boundary_event(&f, Vec2::new(4.45, 1.0), Vec2::new(4.6, 1.1), 3).unwrap();
        assert_eq!(ev.kind, SimEventKind::OutOfBounds);
        let ev = boundary_event(&f, Vec2::new(-4.4, 0.0), Vec2::new(-4.6, -0.3), 3).unwrap();
        assert_eq!(ev.kind, SimEventKind::GoalAway);
        let ev = boundary_event(&f, Vec2::new(1.0, 2.95), Vec2::new(1.0, 3.05), 3).unwrap();
        assert_eq!(ev.kind, SimEventKind::OutOfBounds);
        assert!(boundary_event(&f, Vec2::new(1.0, 2.0), Vec2::new(1.1, 2.1), 3).is_none());
        // Corner cut: passes through the goal mouth before leaving past the post line.
        let ev = boundary_event(&f, Vec2::new(4.4, 0.5), Vec2::new(4.7, 1.0), 3).unwrap();
        assert_eq!(ev.kind, SimEventKind::GoalHome);
    }

    #[test]
    fn non_finite_commands_are_rejected() {
        let cfg = SimConfig::default();
        let mut rng = RngStreams::new(1);
        let mut w = one_robot_world(Vec2::new(2.0, 1.0));
        let out = step(
            &mut w,
            &[SkillCommand::WalkAtVelocity {
                vx: f64::NAN,
                vy: 0.0,
                omega: 0.0,
            }],
            &cfg,
            &mut rng,
        )
        .unwrap();
        assert_eq!(out.rejected, vec![0]);
        assert_eq!(w.robots[0].pose, Pose2D::new(0.0, 0.0, 0.0));
    }

    #[test]
    fn config_validation_names_key() {
        let mut cfg = SimConfig {
            dt: -0.1,
            ..Default::default()
        };
        assert_eq!(cfg.validate().unwrap_err().key, "dt");
        cfg.dt = 0.05;
        cfg.kick_range = 0.1;
        assert_eq!(cfg.validate().unwrap_err().key, "kick_range");
        cfg.kick_range = 0.25;
        cfg.fidelity.velocity_noise_std = 0.1;
        assert_eq!(cfg.validate().unwrap_err().key, "fidelity.velocity_noise_std");
    }
}
