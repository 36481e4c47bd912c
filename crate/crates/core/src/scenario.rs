//! Training scenarios: who is on the field, where things spawn, which
//! fidelity is used, and how the non-learning robots behave.

use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::behavior::Script;
use crate::geometry::{BallState, FieldGeometry, Pose2D, RobotState, Team, Vec2, WorldState};
use crate::policy_io::PolicyKind;
use crate::sim::Fidelity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ScenarioKind {
    #[serde(rename = "BALL_DUEL_2V0")]
    BallDuel2v0,
    #[serde(rename = "MIDFIELD_1V0")]
    Midfield1v0,
    #[serde(rename = "NEARGOAL_1V0")]
    Neargoal1v0,
    Positioning,
    /// Small-field single-robot task with the BALL_DUEL reward.
    ReachBall,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 5] = [
        ScenarioKind::BallDuel2v0,
        ScenarioKind::Midfield1v0,
        ScenarioKind::Neargoal1v0,
        ScenarioKind::Positioning,
        ScenarioKind::ReachBall,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::BallDuel2v0 => "BALL_DUEL_2V0",
            ScenarioKind::Midfield1v0 => "MIDFIELD_1V0",
            ScenarioKind::Neargoal1v0 => "NEARGOAL_1V0",
            ScenarioKind::Positioning => "POSITIONING",
            ScenarioKind::ReachBall => "REACH_BALL",
        }
    }

    /// The scenario a policy is trained in.
    pub fn for_policy(kind: PolicyKind) -> Self {
        match kind {
            PolicyKind::MidField => ScenarioKind::Midfield1v0,
            PolicyKind::BallDuel => ScenarioKind::BallDuel2v0,
            PolicyKind::NearGoal => ScenarioKind::Neargoal1v0,
            PolicyKind::Positioning => ScenarioKind::Positioning,
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| format!("unknown scenario `{s}`"))
    }
}

/// Axis-aligned sampling box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Region {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec2 {
        Vec2::new(uniform(rng, self.x), uniform(rng, self.y))
    }

    pub fn contains(&self, p: Vec2) -> bool {
        (self.x.0..=self.x.1).contains(&p.x) && (self.y.0..=self.y.1).contains(&p.y)
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// How a robot's spawn pose is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE", tag = "kind")]
pub enum Placement {
    /// Uniform in a box, uniform heading.
    Region { region: Region },
    /// At a uniform distance in `[min, max]` and uniform bearing from the
    /// ball, uniform heading, resampled until inside the field with a margin.
    NearBall { min: f64, max: f64 },
    /// Fixed pose.
    Fixed { pose: Pose2D },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotSlot {
    pub id: u8,
    pub team: Team,
    pub placement: Placement,
    /// `None` for the learning robot.
    pub script: Option<Script>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub policy: PolicyKind,
    pub fidelity: Fidelity,
    pub field: FieldGeometry,
    pub ball: Region,
    /// Placed in order; the first slot without a script is the learner.
    pub robots: Vec<RobotSlot>,
    /// Episode length in seconds.
    pub timeout: f64,
}

const MARGIN: f64 = 0.3;

fn field_region(field: &FieldGeometry, margin: f64) -> Region {
    let hx = field.half_length() - margin;
    let hy = field.half_width() - margin;
    Region {
        x: (-hx, hx),
        y: (-hy, hy),
    }
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind) -> Self {
        let field = FieldGeometry::default();
        let learner = |placement| RobotSlot {
            id: 0,
            team: Team::Home,
            placement,
            script: None,
        };
        match kind {
            ScenarioKind::BallDuel2v0 => Self {
                kind,
                policy: PolicyKind::BallDuel,
                fidelity: Fidelity::Low,
                field,
                ball: Region {
                    x: (-3.5, 3.5),
                    y: (-2.5, 2.5),
                },
                robots: vec![
                    learner(Placement::NearBall { min: 0.4, max: 2.0 }),
                    RobotSlot {
                        id: 1,
                        team: Team::Home,
                        placement: Placement::Region {
                            region: field_region(&field, 0.5),
                        },
                        script: Some(Script::Support),
                    },
                ],
                timeout: 30.0,
            },
            ScenarioKind::Midfield1v0 => Self {
                kind,
                policy: PolicyKind::MidField,
                fidelity: Fidelity::Low,
                field,
                ball: Region {
                    x: (-3.5, 2.5),
                    y: (-2.5, 2.5),
                },
                robots: vec![learner(Placement::NearBall { min: 0.5, max: 1.5 })],
                timeout: 60.0,
            },
            ScenarioKind::Neargoal1v0 => {
                let depth = field.goal_box_depth;
                // Box corners lie beyond the 2.5 m far-from-goal radius.
                let hw = (field.goal_box_width * 0.5).min(1.5);
                Self {
                    kind,
                    policy: PolicyKind::NearGoal,
                    fidelity: Fidelity::High,
                    field,
                    ball: Region {
                        x: (field.half_length() - depth, field.half_length() - 0.2),
                        y: (-hw, hw),
                    },
                    robots: vec![learner(Placement::NearBall { min: 0.35, max: 1.0 })],
                    timeout: 30.0,
                }
            }
            ScenarioKind::Positioning => Self {
                kind,
                policy: PolicyKind::Positioning,
                fidelity: Fidelity::Low,
                field,
                ball: Region {
                    x: (-3.0, 3.0),
                    y: (-2.5, 2.5),
                },
                robots: vec![
                    learner(Placement::Region {
                        region: field_region(&field, 0.5),
                    }),
                    RobotSlot {
                        id: 1,
                        team: Team::Home,
                        placement: Placement::NearBall { min: 0.35, max: 0.8 },
                        script: Some(Script::BallCarrier),
                    },
                    RobotSlot {
                        id: 5,
                        team: Team::Away,
                        placement: Placement::Region {
                            region: Region {
                                x: (0.0, 3.5),
                                y: (-2.5, 2.5),
                            },
                        },
                        script: Some(Script::Defender { weakened: false }),
                    },
                    RobotSlot {
                        id: 6,
                        team: Team::Away,
                        placement: Placement::Fixed {
                            pose: Pose2D::new(field.half_length() - 0.3, 0.0, PI),
                        },
                        script: Some(Script::Goalie { weakened: false }),
                    },
                ],
                timeout: 20.0,
            },
            ScenarioKind::ReachBall => {
                let field = FieldGeometry {
                    length: 4.0,
                    width: 3.0,
                    goal_width: 1.0,
                    goal_box_depth: 0.75,
                    goal_box_width: 2.0,
                    ..FieldGeometry::default()
                };
                Self {
                    kind,
                    policy: PolicyKind::BallDuel,
                    fidelity: Fidelity::Low,
                    field,
                    ball: field_region(&field, MARGIN),
                    robots: vec![learner(Placement::Region {
                        region: field_region(&field, MARGIN),
                    })],
                    timeout: 20.0,
                }
            }
        }
    }

    pub fn with_fidelity(mut self, fidelity: Fidelity) -> Self {
        self.fidelity = fidelity;
        self
    }

    /// Id of the learning robot.
    pub fn learner_id(&self) -> u8 {
        self.robots
            .iter()
            .find(|s| s.script.is_none())
            .map_or(0, |s| s.id)
    }

    /// Draws a fresh world. Equal RNG states give identical worlds.
    pub fn spawn<R: Rng + ?Sized>(&self, rng: &mut R) -> WorldState {
        let ball = self.ball.sample(rng);
        let inner = field_region(&self.field, MARGIN);
        let mut robots: Vec<RobotState> = Vec::with_capacity(self.robots.len());
        for slot in &self.robots {
            let pose = loop {
                let (p, theta) = match slot.placement {
                    Placement::Fixed { pose } => break pose,
                    Placement::Region { region } => (region.sample(rng), uniform(rng, (-PI, PI))),
                    Placement::NearBall { min, max } => {
                        let d = uniform(rng, (min, max));
                        let bearing = uniform(rng, (-PI, PI));
                        (ball + Vec2::from_angle(bearing) * d, uniform(rng, (-PI, PI)))
                    }
                };
                let clear_of_ball = p.distance(ball) >= 0.35;
                let clear_of_robots = robots.iter().all(|r| r.position().distance(p) >= 0.5);
                if inner.contains(p) && clear_of_ball && clear_of_robots {
                    break Pose2D::new(p.x, p.y, theta);
                }
            };
            robots.push(RobotState::new(slot.id, slot.team, pose));
        }
        WorldState::new(robots, BallState::at_rest(ball), 0.05)
    }
}
