//! Roster files: which weight files each controlled robot runs, plus
//! selector overrides shared by the team.
//!
//! ```toml
//! [selector]
//! hysteresis_ticks = 3
//!
//! [[robot]]
//! id = 0
//! weights = { MID_FIELD = "mid_field.bin", BALL_DUEL = "ball_duel.bin", NEAR_GOAL = "near_goal_high.bin", POSITIONING = "positioning.bin" }
//! ```
//!
//! Relative paths resolve against the roster file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use soccer_core::behavior::{PolicyBank, PolicyMask, SelectorConfig, TeamRuntime, TeamTick};
use soccer_core::geometry::WorldState;
use soccer_core::policy_io::{PolicyIoError, PolicyKind};
use soccer_core::sim::{RngStreams, SimConfig};
use soccer_ppo::PolicyWeights;

use crate::bank::{BankError, PolicySet};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RosterFile {
    #[serde(default)]
    selector: Option<toml::Table>,
    robot: Vec<RobotEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotEntry {
    id: u8,
    weights: BTreeMap<PolicyKind, PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum RosterError {
    #[error("cannot read {0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("{0}")]
    Parse(String),
    #[error("robot {id}: no weights for {kind}")]
    MissingPolicy { id: u8, kind: PolicyKind },
    #[error("robot {0} listed twice")]
    Duplicate(u8),
    #[error(transparent)]
    Weights(#[from] BankError),
    #[error(transparent)]
    Invalid(#[from] soccer_core::ConfigError),
}

/// A loaded roster: every robot has all four policies, checked against their
/// observation and action sizes at load time.
#[derive(Debug, Clone)]
pub struct Roster {
    pub selector: SelectorConfig,
    pub robots: Vec<(u8, PolicySet)>,
}

impl Roster {
    pub fn load(path: &Path, base: SelectorConfig) -> Result<Self, RosterError> {
        let text = std::fs::read_to_string(path).map_err(|e| RosterError::Io(path.to_owned(), e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")), base)
    }

    pub fn parse(text: &str, dir: &Path, base: SelectorConfig) -> Result<Self, RosterError> {
        let file: RosterFile = toml::from_str(text).map_err(|e| RosterError::Parse(e.to_string()))?;
        let selector = match file.selector {
            None => base,
            Some(over) => {
                let mut t = toml::Table::try_from(base).expect("selector serializes");
                t.extend(over);
                let s: SelectorConfig = t
                    .try_into()
                    .map_err(|e: toml::de::Error| RosterError::Parse(format!("selector: {e}")))?;
                s.validate().map_err(|e| e.nest("selector"))?;
                s
            }
        };
        let mut robots: Vec<(u8, PolicySet)> = Vec::new();
        for r in file.robot {
            if robots.iter().any(|(id, _)| *id == r.id) {
                return Err(RosterError::Duplicate(r.id));
            }
            let mut set = PolicySet::new();
            for kind in PolicyKind::ALL {
                let rel = r.weights.get(&kind).ok_or(RosterError::MissingPolicy { id: r.id, kind })?;
                let path = dir.join(rel);
                let w = PolicyWeights::load_for(&path, kind).map_err(|source| BankError::Load { path, source })?;
                set.insert(w);
            }
            robots.push((r.id, set));
        }
        Ok(Self { selector, robots })
    }

    pub fn team(&self, mask: PolicyMask) -> RosterTeam<'_> {
        RosterTeam {
            members: self
                .robots
                .iter()
                .map(|(id, set)| (TeamRuntime::new(&[*id], self.selector, mask), set))
                .collect(),
        }
    }
}

/// One runtime per robot, each with its own weights.
pub struct RosterTeam<'a> {
    members: Vec<(TeamRuntime, &'a PolicySet)>,
}

impl RosterTeam<'_> {
    pub fn tick(&mut self, world: &WorldState, config: &SimConfig, rng: &mut RngStreams) -> Result<TeamTick, PolicyIoError> {
        let mut out = TeamTick::default();
        for (rt, set) in &mut self.members {
            let bank = set.view();
            let t = rt.tick(world, &bank as &dyn PolicyBank, config, rng)?;
            out.commands.extend(t.commands);
            out.decisions.extend(t.decisions);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use soccer_core::geometry::{BallState, Pose2D, RobotState, Team, Vec2};
    use soccer_ppo::ActorCritic;

    fn write_set(dir: &Path) {
        for (i, kind) in PolicyKind::ALL.into_iter().enumerate() {
            let s = kind.spec();
            let net = ActorCritic::random(s.obs_dim, s.act_dim, &[8], &mut ChaCha8Rng::seed_from_u64(i as u64));
            PolicyWeights::new(kind, net, BTreeMap::new())
                .save(dir.join(format!("{}.bin", kind.as_str())))
                .unwrap();
        }
    }

    fn roster_text(ids: &[u8]) -> String {
        let mut s = String::from("[selector]\nhysteresis_ticks = 0\n");
        for id in ids {
            s += &format!(
                "[[robot]]\nid = {id}\nweights = {{ MID_FIELD = \"MID_FIELD.bin\", BALL_DUEL = \"BALL_DUEL.bin\", NEAR_GOAL = \"NEAR_GOAL.bin\", POSITIONING = \"POSITIONING.bin\" }}\n"
            );
        }
        s
    }

    #[test]
    fn loads_and_ticks_every_robot() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path();
        write_set(dir);
        let roster = Roster::parse(&roster_text(&[0, 1]), dir, SelectorConfig::default()).unwrap();
        assert_eq!(roster.selector.hysteresis_ticks, 0);
        assert_eq!(roster.robots.len(), 2);
        let world = WorldState::new(
            vec![
                RobotState::new(0, Team::Home, Pose2D::new(-1.0, 0.0, 0.0)),
                RobotState::new(1, Team::Home, Pose2D::new(-3.0, 0.0, 0.0)),
            ],
            BallState::at_rest(Vec2::new(0.0, 0.0)),
            0.05,
        );
        let mut team = roster.team(PolicyMask::ALL);
        let tick = team.tick(&world, &SimConfig::default(), &mut RngStreams::new(0)).unwrap();
        assert_eq!(tick.commands.len(), 2);
        assert_eq!(tick.decisions[1].chosen, PolicyKind::Positioning);
    }

    #[test]
    fn wrong_policy_file_fails_at_load() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path();
        write_set(dir);
        let text = roster_text(&[0]).replace("MID_FIELD = \"MID_FIELD.bin\"", "MID_FIELD = \"NEAR_GOAL.bin\"");
        let err = Roster::parse(&text, dir, SelectorConfig::default()).unwrap_err();
        assert!(matches!(err, RosterError::Weights(BankError::Load { .. })), "{err}");
        let err = Roster::parse(&roster_text(&[0, 0]), dir, SelectorConfig::default()).unwrap_err();
        assert!(matches!(err, RosterError::Duplicate(0)));
    }
}
