//! Simulator throughput check and observation layout listing.

use std::fmt::Write as _;
use std::time::Instant;

use soccer_core::behavior::Script;
use soccer_core::geometry::{BallState, Pose2D, RobotState, Team, Vec2, WorldState};
use soccer_core::policy_io::{layout, PolicyKind};
use soccer_core::sim::{Fidelity, SimConfig, SimError, Simulator};
use soccer_core::skills::SkillCommand;

pub const TARGET_STEPS_PER_SEC: f64 = 50_000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Throughput {
    pub steps: u64,
    pub seconds: f64,
}

impl Throughput {
    pub fn steps_per_sec(&self) -> f64 {
        self.steps as f64 / self.seconds
    }
}

fn two_v_two() -> WorldState {
    WorldState::new(
        vec![
            RobotState::new(0, Team::Home, Pose2D::new(-1.0, 0.3, 0.0)),
            RobotState::new(1, Team::Home, Pose2D::new(-2.5, -1.0, 0.0)),
            RobotState::new(5, Team::Away, Pose2D::new(1.5, 0.0, std::f64::consts::PI)),
            RobotState::new(6, Team::Away, Pose2D::new(4.2, 0.0, std::f64::consts::PI)),
        ],
        BallState::at_rest(Vec2::new(-0.5, 0.2)),
        0.05,
    )
}

/// Steps a LOW-fidelity 2v2 game for `steps` ticks: two robots walk at fixed
/// velocities and two run the scripted defender and goalie, so the planner,
/// kicks and collisions are all exercised. The world is reset whenever the
/// ball leaves play.
pub fn measure_throughput(steps: u64) -> Result<Throughput, SimError> {
    let cfg = SimConfig::default().with_fidelity(Fidelity::Low).with_seed(7);
    let mut sim = Simulator::new(two_v_two(), cfg);
    let scripts = [Script::Defender { weakened: false }, Script::Goalie { weakened: false }];
    let mut cmds = vec![SkillCommand::Stand; 4];
    let start = Instant::now();
    for t in 0..steps {
        let w = &sim.world;
        let phase = (t % 200) as f64 / 200.0 * std::f64::consts::TAU;
        cmds[0] = SkillCommand::WalkAtVelocity {
            vx: 0.3,
            vy: 0.1 * phase.sin(),
            omega: 0.5 * phase.cos(),
        };
        cmds[1] = SkillCommand::WalkAtVelocity {
            vx: 0.2,
            vy: -0.1,
            omega: 0.3,
        };
        cmds[2] = scripts[0].command(w, 5, &cfg);
        cmds[3] = scripts[1].command(w, 6, &cfg);
        let out = sim.step(&cmds)?;
        if !out.events.is_empty() && out.events.iter().any(|e| e.is_goal() || e.kind == soccer_core::sim::SimEventKind::OutOfBounds) {
            sim.world = two_v_two();
        }
    }
    Ok(Throughput {
        steps,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Human-readable observation layouts of all four policies.
pub fn layouts() -> String {
    let mut s = String::new();
    for kind in PolicyKind::ALL {
        let spec = kind.spec();
        let _ = writeln!(
            s,
            "{kind}: obs_dim {} act_dim {} ({:?})",
            spec.obs_dim, spec.act_dim, spec.skill_binding
        );
        let mut offset = 0;
        for e in layout(kind) {
            let _ = writeln!(s, "  [{:>2}..{:>2}) {:<26} {}", offset, offset + e.width, e.name, e.description);
            offset += e.width;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layouts_cover_every_dimension() {
        let s = layouts();
        for kind in PolicyKind::ALL {
            assert!(s.contains(&format!("{kind}: obs_dim {}", kind.spec().obs_dim)));
        }
    }

    #[test]
    fn throughput_runs() {
        let t = measure_throughput(1000).unwrap();
        assert_eq!(t.steps, 1000);
        assert!(t.steps_per_sec() > 0.0);
    }
}
