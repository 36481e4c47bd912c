//! Contact resolution between oriented robot rectangles and the ball disk.

use crate::geometry::{to_egocentric, FieldGeometry, RobotState, Vec2, WorldState};

use super::SimConfig;

const SLOP: f64 = 1e-9;
const PASSES: usize = 64;

#[derive(Clone, Copy)]
struct Obb {
    c: Vec2,
    u: Vec2,
    v: Vec2,
    hl: f64,
    hw: f64,
}

impl Obb {
    fn of(r: &RobotState, f: &FieldGeometry) -> Self {
        let u = Vec2::from_angle(r.pose.theta);
        Self {
            c: r.position(),
            u,
            v: u.perp(),
            hl: f.robot_half_length,
            hw: f.robot_half_width,
        }
    }

    fn radius_along(&self, n: Vec2) -> f64 {
        self.hl * self.u.dot(n).abs() + self.hw * self.v.dot(n).abs()
    }
}

/// Minimum translation that moves `b` out of `a` (separating-axis test), or
/// `None` when the rectangles do not overlap.
pub fn robot_robot_penetration(a: &RobotState, b: &RobotState, field: &FieldGeometry) -> Option<Vec2> {
    let oa = Obb::of(a, field);
    let ob = Obb::of(b, field);
    let d = ob.c - oa.c;
    let mut best: Option<(f64, Vec2)> = None;
    for n in [oa.u, oa.v, ob.u, ob.v] {
        let sep = d.dot(n);
        let overlap = oa.radius_along(n) + ob.radius_along(n) - sep.abs();
        if overlap <= 0.0 {
            return None;
        }
        if best.is_none_or(|(o, _)| overlap < o) {
            let dir = if sep >= 0.0 { n } else { -n };
            best = Some((overlap, dir));
        }
    }
    best.map(|(o, n)| n * o)
}

/// Outward contact normal (global) and penetration depth of the ball into a
/// robot rectangle.
pub fn ball_robot_penetration(robot: &RobotState, ball: Vec2, field: &FieldGeometry) -> Option<(Vec2, f64)> {
    let hl = field.robot_half_length;
    let hw = field.robot_half_width;
    let r = field.ball_radius;
    let local = to_egocentric(&robot.pose, ball);
    let q = Vec2::new(local.x.clamp(-hl, hl), local.y.clamp(-hw, hw));
    let (n_local, depth) = if q == local {
        let dx = hl - local.x.abs();
        let dy = hw - local.y.abs();
        let sx = if local.x >= 0.0 { 1.0 } else { -1.0 };
        let sy = if local.y >= 0.0 { 1.0 } else { -1.0 };
        if dx < dy {
            (Vec2::new(sx, 0.0), dx + r)
        } else {
            (Vec2::new(0.0, sy), dy + r)
        }
    } else {
        let diff = local - q;
        let dist = diff.norm();
        if dist >= r {
            return None;
        }
        (diff * (1.0 / dist), r - dist)
    };
    Some((n_local.rotate(robot.pose.theta), depth))
}

fn push_robot(r: &mut RobotState, by: Vec2) {
    r.pose.x += by.x;
    r.pose.y += by.y;
}

fn separate_robots(world: &mut WorldState, field: &FieldGeometry) -> bool {
    let mut any = false;
    let n = world.robots.len();
    for i in 0..n {
        for j in (i + 1)..n {
            if let Some(mtv) = robot_robot_penetration(&world.robots[i], &world.robots[j], field) {
                let half = mtv * 0.5 + mtv.normalized() * SLOP;
                push_robot(&mut world.robots[i], -half);
                push_robot(&mut world.robots[j], half);
                any = true;
            }
        }
    }
    any
}

/// Positional push-out of all overlaps. The ball yields to robots and picks
/// up the restitution-scaled normal component of the robot's velocity; if it
/// is wedged and cannot escape, robots yield to it instead. Returns whether
/// the ball touched any robot.
pub(super) fn resolve(world: &mut WorldState, config: &SimConfig) -> bool {
    let field = &config.field;
    let e = config.fidelity.contact_restitution;
    let mut contact = false;
    for _ in 0..PASSES {
        let mut any = separate_robots(world, field);
        for r in &world.robots {
            if let Some((n, depth)) = ball_robot_penetration(r, world.ball.position, field) {
                world.ball.position += n * (depth + SLOP);
                let robot_v = r.velocity.linear().rotate(r.pose.theta);
                let vn = (world.ball.velocity - robot_v).dot(n);
                if vn < 0.0 {
                    world.ball.velocity = world.ball.velocity - n * ((1.0 + e) * vn);
                }
                contact = true;
                any = true;
            }
        }
        if !any {
            return contact;
        }
    }
    for _ in 0..PASSES {
        let mut any = false;
        let ball = world.ball.position;
        for r in &mut world.robots {
            if let Some((n, depth)) = ball_robot_penetration(r, ball, field) {
                push_robot(r, -n * (depth + SLOP));
                any = true;
            }
        }
        any |= separate_robots(world, field);
        if !any {
            break;
        }
    }
    contact
}
