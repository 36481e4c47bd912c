//! Field geometry, coordinate frames and the ground-truth world model.
//!
//! Global frame: origin at the field center, +x toward the goal the home
//! team attacks, +y to the left when looking along +x. Egocentric frames put
//! the observer at the origin with +x along its heading.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Wraps an angle into (−π, π].
pub fn normalize_angle(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let mut a = theta.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Smallest signed difference `a - b`, in (−π, π].
pub fn angle_diff(a: f64, b: f64) -> f64 {
    normalize_angle(a - b)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { x: c, y: s }
    }

    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    #[inline]
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    #[inline]
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Unit vector in the same direction, or zero for the zero vector.
    #[inline]
    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        if n > 0.0 {
            self * (1.0 / n)
        } else {
            Vec2::ZERO
        }
    }

    #[inline]
    pub fn rotate(self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Counter-clockwise perpendicular.
    #[inline]
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    /// Mirror image across the x-axis.
    #[inline]
    pub fn reflect_y(self) -> Vec2 {
        Vec2::new(self.x, -self.y)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Planar pose; `theta` is kept in (−π, π].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    #[inline]
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    /// `self ⊕ other`: applies `other`, expressed in this pose's frame.
    pub fn compose(&self, other: &Pose2D) -> Pose2D {
        let p = self.position() + other.position().rotate(self.theta);
        Pose2D::new(p.x, p.y, self.theta + other.theta)
    }

    pub fn inverse(&self) -> Pose2D {
        let p = (-self.position()).rotate(-self.theta);
        Pose2D::new(p.x, p.y, -self.theta)
    }
}

/// Expresses a global point in the observer's frame (+x = facing direction).
#[inline]
pub fn to_egocentric(observer: &Pose2D, point: Vec2) -> Vec2 {
    (point - observer.position()).rotate(-observer.theta)
}

/// Inverse of [`to_egocentric`].
#[inline]
pub fn from_egocentric(observer: &Pose2D, point: Vec2) -> Vec2 {
    point.rotate(observer.theta) + observer.position()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Team {
    Home,
    Away,
}

impl Team {
    pub fn opponent(self) -> Team {
        match self {
            Team::Home => Team::Away,
            Team::Away => Team::Home,
        }
    }

    /// +1 for the team attacking +x, −1 otherwise.
    pub fn attack_sign(self) -> f64 {
        match self {
            Team::Home => 1.0,
            Team::Away => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldGeometry {
    pub length: f64,
    pub width: f64,
    pub goal_width: f64,
    pub goal_box_depth: f64,
    pub goal_box_width: f64,
    pub robot_half_length: f64,
    pub robot_half_width: f64,
    pub ball_radius: f64,
}

impl Default for FieldGeometry {
    fn default() -> Self {
        Self {
            length: 9.0,
            width: 6.0,
            goal_width: 1.5,
            goal_box_depth: 1.65,
            goal_box_width: 4.0,
            robot_half_length: 0.15,
            robot_half_width: 0.15,
            ball_radius: 0.05,
        }
    }
}

/// Margin around the field inside which robots and the ball are kept.
pub const APRON: f64 = 1.0;

impl FieldGeometry {
    pub fn half_length(&self) -> f64 {
        self.length * 0.5
    }

    pub fn half_width(&self) -> f64 {
        self.width * 0.5
    }

    /// Returns the name of the first violated invariant, if any.
    pub fn validate(&self) -> Result<(), &'static str> {
        let named = [
            ("length", self.length),
            ("width", self.width),
            ("goal_width", self.goal_width),
            ("goal_box_depth", self.goal_box_depth),
            ("goal_box_width", self.goal_box_width),
            ("robot_half_length", self.robot_half_length),
            ("robot_half_width", self.robot_half_width),
            ("ball_radius", self.ball_radius),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v > 0.0) {
                return Err(name);
            }
        }
        if self.goal_width >= self.width {
            return Err("goal_width");
        }
        if self.goal_box_width >= self.width {
            return Err("goal_box_width");
        }
        if self.goal_box_depth >= self.length * 0.5 {
            return Err("goal_box_depth");
        }
        Ok(())
    }

    /// Center of the goal `team` attacks.
    pub fn opponent_goal_center(&self, team: Team) -> Vec2 {
        Vec2::new(team.attack_sign() * self.half_length(), 0.0)
    }

    /// Center of the goal `team` defends.
    pub fn own_goal_center(&self, team: Team) -> Vec2 {
        self.opponent_goal_center(team.opponent())
    }

    /// All four posts: `[+x left, +x right, −x left, −x right]`.
    pub fn goalposts(&self) -> [Vec2; 4] {
        let hl = self.half_length();
        let hg = self.goal_width * 0.5;
        [
            Vec2::new(hl, hg),
            Vec2::new(hl, -hg),
            Vec2::new(-hl, hg),
            Vec2::new(-hl, -hg),
        ]
    }

    /// The two posts of the goal `team` attacks, left (+y) first.
    pub fn opponent_goalposts(&self, team: Team) -> [Vec2; 2] {
        let p = self.goalposts();
        match team {
            Team::Home => [p[0], p[1]],
            Team::Away => [p[2], p[3]],
        }
    }

    /// Goal-box containment at the end `attacker` shoots at, boundary inclusive,
    /// with the box grown by `margin` on its open sides.
    pub fn in_opposing_goal_box_with_margin(&self, attacker: Team, point: Vec2, margin: f64) -> bool {
        let depth = self.goal_box_depth + margin;
        let half_w = self.goal_box_width * 0.5 + margin;
        let depth_into = self.half_length() - attacker.attack_sign() * point.x;
        (0.0..=depth).contains(&depth_into) && point.y.abs() <= half_w
    }

    pub fn in_opposing_goal_box(&self, attacker: Team, point: Vec2) -> bool {
        self.in_opposing_goal_box_with_margin(attacker, point, 0.0)
    }

    pub fn in_field(&self, p: Vec2) -> bool {
        p.x.abs() <= self.half_length() && p.y.abs() <= self.half_width()
    }

    /// Clamps into the field plus [`APRON`].
    pub fn clamp_to_apron(&self, p: Vec2) -> Vec2 {
        let hx = self.half_length() + APRON;
        let hy = self.half_width() + APRON;
        Vec2::new(p.x.clamp(-hx, hx), p.y.clamp(-hy, hy))
    }

    /// Signed distances to the left (+y), right (−y), top (+x) and bottom (−x)
    /// boundary lines; negative outside.
    pub fn side_distances(&self, p: Vec2) -> [f64; 4] {
        let hl = self.half_length();
        let hw = self.half_width();
        [hw - p.y, p.y + hw, hl - p.x, p.x + hl]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Velocity {
    /// Forward, robot frame (m/s).
    pub vx: f64,
    /// Leftward, robot frame (m/s).
    pub vy: f64,
    pub omega: f64,
}

impl Velocity {
    pub const ZERO: Velocity = Velocity {
        vx: 0.0,
        vy: 0.0,
        omega: 0.0,
    };

    pub fn linear(&self) -> Vec2 {
        Vec2::new(self.vx, self.vy)
    }

    pub fn is_finite(&self) -> bool {
        self.vx.is_finite() && self.vy.is_finite() && self.omega.is_finite()
    }

    /// Caps the planar speed at `max_linear` and the turn rate at `max_angular`.
    pub fn clamped(&self, max_linear: f64, max_angular: f64) -> Velocity {
        let speed = self.vx.hypot(self.vy);
        let k = if speed > max_linear && speed > 0.0 {
            max_linear / speed
        } else {
            1.0
        };
        Velocity {
            vx: self.vx * k,
            vy: self.vy * k,
            omega: self.omega.clamp(-max_angular, max_angular),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub id: u8,
    pub team: Team,
    pub pose: Pose2D,
    pub velocity: Velocity,
    pub upright: bool,
    /// Seconds left until a fallen robot stands again.
    pub recovery_left: f64,
}

impl RobotState {
    pub fn new(id: u8, team: Team, pose: Pose2D) -> Self {
        Self {
            id,
            team,
            pose,
            velocity: Velocity::ZERO,
            upright: true,
            recovery_left: 0.0,
        }
    }

    #[inline]
    pub fn position(&self) -> Vec2 {
        self.pose.position()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallState {
    pub position: Vec2,
    pub velocity: Vec2,
    /// Positions at the end of the three previous ticks, oldest first.
    pub history: [Vec2; 3],
}

impl BallState {
    pub fn at_rest(position: Vec2) -> Self {
        Self {
            position,
            velocity: Vec2::ZERO,
            history: [position; 3],
        }
    }

    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }

    pub(crate) fn push_history(&mut self) {
        self.history = [self.history[1], self.history[2], self.position];
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub robots: Vec<RobotState>,
    pub ball: BallState,
    pub tick: u64,
    pub dt: f64,
}

impl WorldState {
    pub fn new(robots: Vec<RobotState>, ball: BallState, dt: f64) -> Self {
        Self {
            robots,
            ball,
            tick: 0,
            dt,
        }
    }

    pub fn robot(&self, id: u8) -> Option<&RobotState> {
        self.robots.iter().find(|r| r.id == id)
    }

    pub fn robot_index(&self, id: u8) -> Option<usize> {
        self.robots.iter().position(|r| r.id == id)
    }

    pub fn elapsed(&self) -> f64 {
        self.tick as f64 * self.dt
    }

    pub fn teammates(&self, id: u8) -> impl Iterator<Item = &RobotState> {
        let team = self.robot(id).map(|r| r.team);
        self.robots
            .iter()
            .filter(move |r| Some(r.team) == team && r.id != id)
    }

    pub fn opponents(&self, id: u8) -> impl Iterator<Item = &RobotState> {
        let team = self.robot(id).map(|r| r.team.opponent());
        self.robots.iter().filter(move |r| Some(r.team) == team)
    }

    /// Mirror image across the x-axis (y → −y, headings negated).
    pub fn reflected(&self) -> WorldState {
        let mut w = self.clone();
        for r in &mut w.robots {
            r.pose = Pose2D::new(r.pose.x, -r.pose.y, -r.pose.theta);
            r.velocity.vy = -r.velocity.vy;
            r.velocity.omega = -r.velocity.omega;
        }
        w.ball.position = w.ball.position.reflect_y();
        w.ball.velocity = w.ball.velocity.reflect_y();
        for h in &mut w.ball.history {
            *h = h.reflect_y();
        }
        w
    }
}
