//! Deployment-side decision making: the rule-based sub-policy selector, the
//! team runtime that turns selections into skill commands, and the scripted
//! robots (goalie, defender, support and ball-carrier) used as teammates and
//! opponents.

use serde::{Deserialize, Serialize};

use crate::geometry::{Team, Vec2, WorldState};
use crate::policy_io::{write_observation, ActionDecoder, PolicyIoError, PolicyKind};
use crate::sim::{observe_ball, RngStreams, SimConfig};
use crate::skills::{can_kick, SkillCommand};
use crate::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectorConfig {
    pub ball_duel_opponent_radius: f64,
    /// Growth of the opposing goal box used for the NEAR_GOAL rule.
    pub near_goal_margin: f64,
    pub near_ball_radius: f64,
    pub hysteresis_ticks: u32,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        Self {
            ball_duel_opponent_radius: 0.5,
            near_goal_margin: 0.0,
            near_ball_radius: 1.0,
            hysteresis_ticks: 5,
        }
    }
}

impl SelectorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (key, v) in [
            ("ball_duel_opponent_radius", self.ball_duel_opponent_radius),
            ("near_ball_radius", self.near_ball_radius),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::invalid(key, "must be finite and > 0"));
            }
        }
        if !(self.near_goal_margin.is_finite() && self.near_goal_margin >= 0.0) {
            return Err(ConfigError::invalid("near_goal_margin", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Which sub-policies are available; a disabled policy's rule never fires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyMask {
    pub mid_field: bool,
    pub ball_duel: bool,
    pub near_goal: bool,
    pub positioning: bool,
}

impl Default for PolicyMask {
    fn default() -> Self {
        Self::ALL
    }
}

impl PolicyMask {
    pub const ALL: PolicyMask = PolicyMask {
        mid_field: true,
        ball_duel: true,
        near_goal: true,
        positioning: true,
    };

    pub fn without(kind: PolicyKind) -> Self {
        let mut m = Self::ALL;
        *m.slot(kind) = false;
        m
    }

    pub fn enabled(&self, kind: PolicyKind) -> bool {
        match kind {
            PolicyKind::MidField => self.mid_field,
            PolicyKind::BallDuel => self.ball_duel,
            PolicyKind::NearGoal => self.near_goal,
            PolicyKind::Positioning => self.positioning,
        }
    }

    fn slot(&mut self, kind: PolicyKind) -> &mut bool {
        match kind {
            PolicyKind::MidField => &mut self.mid_field,
            PolicyKind::BallDuel => &mut self.ball_duel,
            PolicyKind::NearGoal => &mut self.near_goal,
            PolicyKind::Positioning => &mut self.positioning,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RuleId {
    TeammateCloser,
    NearGoal,
    BallDuel,
    Default,
    /// MID_FIELD is disabled and no other rule fired; the first enabled
    /// ball-playing policy (BALL_DUEL, then NEAR_GOAL) takes over.
    Fallback,
}

/// Distances the rules looked at, for the decision log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectorInputs {
    pub self_to_ball: f64,
    pub closest_teammate_to_ball: Option<f64>,
    pub closest_opponent_to_ball: Option<f64>,
    pub ball_in_goal_box: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectorDecision {
    pub robot_id: u8,
    pub chosen: PolicyKind,
    pub rule_fired: RuleId,
    /// The rule winner this tick; differs from `chosen` while hysteresis holds
    /// the previous policy.
    pub candidate: PolicyKind,
    pub inputs: SelectorInputs,
}

/// One evaluation of the rule table, without hysteresis. `ball` is the
/// robot's (possibly noisy) global ball estimate; teammate and opponent poses
/// are taken as known.
pub fn select_rule(
    world: &WorldState,
    self_id: u8,
    ball: Vec2,
    field: &crate::geometry::FieldGeometry,
    config: &SelectorConfig,
    mask: &PolicyMask,
) -> (PolicyKind, RuleId, SelectorInputs) {
    let me = world.robot(self_id).expect("selector robot exists");
    let self_to_ball = me.position().distance(ball);
    let closest_teammate_to_ball = world
        .teammates(self_id)
        .filter(|r| r.upright)
        .map(|r| r.position().distance(ball))
        .min_by(f64::total_cmp);
    let closest_opponent_to_ball = world
        .opponents(self_id)
        .map(|r| r.position().distance(ball))
        .min_by(f64::total_cmp);
    let ball_in_goal_box = field.in_opposing_goal_box_with_margin(me.team, ball, config.near_goal_margin);
    let inputs = SelectorInputs {
        self_to_ball,
        closest_teammate_to_ball,
        closest_opponent_to_ball,
        ball_in_goal_box,
    };

    if mask.positioning && closest_teammate_to_ball.is_some_and(|d| d < self_to_ball) {
        return (PolicyKind::Positioning, RuleId::TeammateCloser, inputs);
    }
    if mask.near_goal && ball_in_goal_box && self_to_ball <= config.near_ball_radius {
        return (PolicyKind::NearGoal, RuleId::NearGoal, inputs);
    }
    if mask.ball_duel && closest_opponent_to_ball.is_some_and(|d| d <= config.ball_duel_opponent_radius) {
        return (PolicyKind::BallDuel, RuleId::BallDuel, inputs);
    }
    if mask.mid_field {
        return (PolicyKind::MidField, RuleId::Default, inputs);
    }
    let fallback = [PolicyKind::BallDuel, PolicyKind::NearGoal, PolicyKind::Positioning]
        .into_iter()
        .find(|&k| mask.enabled(k))
        .expect("at least one policy enabled");
    (fallback, RuleId::Fallback, inputs)
}

/// Rule selection with switch hysteresis for one robot.
#[derive(Debug, Clone, Default)]
pub struct Selector {
    current: Option<PolicyKind>,
    candidate: Option<PolicyKind>,
    streak: u32,
}

impl Selector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn current(&self) -> Option<PolicyKind> {
        self.current
    }

    /// Feeds this tick's rule winner; returns the committed policy.
    pub fn commit(&mut self, winner: PolicyKind, hysteresis_ticks: u32) -> PolicyKind {
        match self.current {
            None => {
                self.current = Some(winner);
                self.candidate = None;
                self.streak = 0;
            }
            Some(cur) if cur == winner => {
                self.candidate = None;
                self.streak = 0;
            }
            Some(_) => {
                if self.candidate == Some(winner) {
                    self.streak += 1;
                } else {
                    self.candidate = Some(winner);
                    self.streak = 1;
                }
                if self.streak >= hysteresis_ticks {
                    self.current = Some(winner);
                    self.candidate = None;
                    self.streak = 0;
                }
            }
        }
        self.current.expect("committed")
    }

    pub fn select(
        &mut self,
        world: &WorldState,
        self_id: u8,
        ball: Vec2,
        field: &crate::geometry::FieldGeometry,
        config: &SelectorConfig,
        mask: &PolicyMask,
    ) -> SelectorDecision {
        let (winner, rule, inputs) = select_rule(world, self_id, ball, field, config, mask);
        let chosen = self.commit(winner, config.hysteresis_ticks);
        SelectorDecision {
            robot_id: self_id,
            chosen,
            rule_fired: rule,
            candidate: winner,
            inputs,
        }
    }
}

/// Stateless selection with the true ball position and no hysteresis.
pub fn select(world: &WorldState, self_id: u8, field: &crate::geometry::FieldGeometry, config: &SelectorConfig) -> SelectorDecision {
    let (chosen, rule_fired, inputs) = select_rule(world, self_id, world.ball.position, field, config, &PolicyMask::ALL);
    SelectorDecision {
        robot_id: self_id,
        chosen,
        rule_fired,
        candidate: chosen,
        inputs,
    }
}

/// Support spot for a robot not playing the ball: 1.5 m behind the ball
/// toward its own goal and 1.5 m toward the field's long axis, kept 0.3 m
/// inside the lines.
pub fn strategy_position(world: &WorldState, robot_id: u8, field: &crate::geometry::FieldGeometry) -> Vec2 {
    let team = world.robot(robot_id).map_or(Team::Home, |r| r.team);
    let b = world.ball.position;
    let side = if b.y >= 0.0 { -1.0 } else { 1.0 };
    let p = Vec2::new(b.x - 1.5 * team.attack_sign(), b.y + 1.5 * side);
    let hx = field.half_length() - 0.3;
    let hy = field.half_width() - 0.3;
    Vec2::new(p.x.clamp(-hx, hx), p.y.clamp(-hy, hy))
}

/// Depth of the area the scripted goalie keeps to, in front of its goal.
pub const GOALIE_AREA_DEPTH: f64 = 0.6;

/// Where the goalie wants to stand: on the ball–goal-center segment at the
/// front of its area, or halfway to the ball when the ball is inside it.
pub fn goalie_target(world: &WorldState, team: Team, field: &crate::geometry::FieldGeometry) -> Vec2 {
    let g = field.own_goal_center(team);
    let b = world.ball.position;
    let inward = team.attack_sign();
    let depth_of_ball = (b.x - g.x) * inward;
    let half_w = field.goal_width * 0.5 + 0.25;
    let p = if depth_of_ball > GOALIE_AREA_DEPTH {
        g + (b - g) * (GOALIE_AREA_DEPTH / depth_of_ball)
    } else {
        g + (b - g) * 0.5
    };
    let x_lo = g.x.min(g.x + inward * GOALIE_AREA_DEPTH);
    let x_hi = g.x.max(g.x + inward * GOALIE_AREA_DEPTH);
    Vec2::new(p.x.clamp(x_lo, x_hi), p.y.clamp(-half_w, half_w))
}

/// Goal-side blocking point of the defender: 0.5 m ball-side of the midpoint
/// between ball and own goal center, never past a spot 0.35 m short of the
/// ball.
pub fn defender_target(world: &WorldState, team: Team, field: &crate::geometry::FieldGeometry) -> Vec2 {
    let g = field.own_goal_center(team);
    let b = world.ball.position;
    let d = b.distance(g);
    if d == 0.0 {
        return g;
    }
    let s = (d * 0.5 + 0.5).min((d - 0.35).max(0.0));
    g + (b - g) * (s / d)
}

fn clearing_kick(team: Team) -> f64 {
    match team {
        Team::Home => 0.0,
        Team::Away => std::f64::consts::PI,
    }
}

fn face_ball(world: &WorldState, robot_id: u8) -> f64 {
    world
        .robot(robot_id)
        .map_or(0.0, |r| (world.ball.position - r.position()).angle())
}

pub fn scripted_goalie(world: &WorldState, robot_id: u8, weakened: bool, config: &SimConfig) -> SkillCommand {
    let Some(me) = world.robot(robot_id) else {
        return SkillCommand::Stand;
    };
    if !weakened && can_kick(world, robot_id, config) {
        return SkillCommand::WalkAndKick {
            kick_angle: clearing_kick(me.team),
        };
    }
    SkillCommand::WalkToPoint {
        target: goalie_target(world, me.team, &config.field),
        face: face_ball(world, robot_id),
    }
}

pub fn scripted_defender(world: &WorldState, robot_id: u8, weakened: bool, config: &SimConfig) -> SkillCommand {
    let Some(me) = world.robot(robot_id) else {
        return SkillCommand::Stand;
    };
    if !weakened && can_kick(world, robot_id, config) {
        return SkillCommand::WalkAndKick {
            kick_angle: clearing_kick(me.team),
        };
    }
    SkillCommand::WalkToPoint {
        target: defender_target(world, me.team, &config.field),
        face: face_ball(world, robot_id),
    }
}

/// Scripted controllers for robots that are not learning or running the
/// team runtime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Script {
    Goalie { weakened: bool },
    Defender { weakened: bool },
    /// Walks to its [`strategy_position`] facing the ball.
    Support,
    /// Walk-and-kick toward the attacked goal center.
    BallCarrier,
    Idle,
}

impl Script {
    pub fn command(&self, world: &WorldState, robot_id: u8, config: &SimConfig) -> SkillCommand {
        match *self {
            Script::Goalie { weakened } => scripted_goalie(world, robot_id, weakened, config),
            Script::Defender { weakened } => scripted_defender(world, robot_id, weakened, config),
            Script::Support => SkillCommand::WalkToPoint {
                target: strategy_position(world, robot_id, &config.field),
                face: face_ball(world, robot_id),
            },
            Script::BallCarrier => {
                let team = world.robot(robot_id).map_or(Team::Home, |r| r.team);
                let goal = config.field.opponent_goal_center(team);
                SkillCommand::WalkAndKick {
                    kick_angle: (goal - world.ball.position).angle(),
                }
            }
            Script::Idle => SkillCommand::Stand,
        }
    }
}

/// Source of deterministic (mean) actions for each sub-policy.
pub trait PolicyBank {
    fn act_dim(&self, kind: PolicyKind) -> usize;
    /// Writes the mean action for `obs` into `out` (cleared first).
    fn mean_action(&self, kind: PolicyKind, obs: &[f64], out: &mut Vec<f64>);
}

/// Per-robot runtime state: hysteresis and the action decoders of all four
/// policies.
#[derive(Debug, Clone)]
pub struct TeamAgent {
    pub robot_id: u8,
    selector: Selector,
    decoders: [ActionDecoder; 4],
    active: Option<PolicyKind>,
}

impl TeamAgent {
    pub fn new(robot_id: u8) -> Self {
        Self {
            robot_id,
            selector: Selector::new(),
            decoders: [ActionDecoder::new(); 4],
            active: None,
        }
    }

    pub fn active(&self) -> Option<PolicyKind> {
        self.active
    }
}

fn slot(kind: PolicyKind) -> usize {
    kind as usize
}

/// Commands for each controlled robot, plus one decision per upright one.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TeamTick {
    pub commands: Vec<(u8, SkillCommand)>,
    pub decisions: Vec<SelectorDecision>,
}

/// Heuristic selection over learned sub-policies for a set of robots.
#[derive(Debug, Clone)]
pub struct TeamRuntime {
    pub agents: Vec<TeamAgent>,
    pub selector: SelectorConfig,
    pub mask: PolicyMask,
    obs: Vec<f64>,
    act: Vec<f64>,
}

impl TeamRuntime {
    pub fn new(robot_ids: &[u8], selector: SelectorConfig, mask: PolicyMask) -> Self {
        Self {
            agents: robot_ids.iter().map(|&id| TeamAgent::new(id)).collect(),
            selector,
            mask,
            obs: Vec::new(),
            act: Vec::new(),
        }
    }

    /// select → observe → mean action → decode, for every controlled robot.
    /// Fallen robots stand and log no decision.
    pub fn tick<B: PolicyBank + ?Sized>(
        &mut self,
        world: &WorldState,
        bank: &B,
        config: &SimConfig,
        rng: &mut RngStreams,
    ) -> Result<TeamTick, PolicyIoError> {
        let mut out = TeamTick::default();
        for agent in &mut self.agents {
            let id = agent.robot_id;
            let me = world.robot(id).ok_or(PolicyIoError::UnknownRobot(id))?;
            if !me.upright {
                out.commands.push((id, SkillCommand::Stand));
                continue;
            }
            let ball_est = crate::geometry::from_egocentric(&me.pose, observe_ball(world, id, config, rng));
            let decision = agent
                .selector
                .select(world, id, ball_est, &config.field, &self.selector, &self.mask);
            let kind = decision.chosen;
            if agent.active != Some(kind) {
                agent.decoders[slot(kind)].reset();
                agent.active = Some(kind);
            }
            let spec = kind.spec();
            let strategy = (kind == PolicyKind::Positioning).then(|| strategy_position(world, id, &config.field));
            write_observation(&spec, world, id, strategy, config, rng, &mut self.obs)?;
            bank.mean_action(kind, &self.obs, &mut self.act);
            let cmd = agent.decoders[slot(kind)].decode(&spec, &self.act, &me.pose, config);
            out.commands.push((id, cmd));
            out.decisions.push(decision);
        }
        Ok(out)
    }
}

/// Convenience form of [`TeamRuntime::tick`].
pub fn run_team_tick<B: PolicyBank + ?Sized>(
    world: &WorldState,
    runtime: &mut TeamRuntime,
    bank: &B,
    config: &SimConfig,
    rng: &mut RngStreams,
) -> Result<TeamTick, PolicyIoError> {
    runtime.tick(world, bank, config, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BallState, FieldGeometry, Pose2D, RobotState};
    use crate::sim::Simulator;
    use proptest::prelude::*;

    fn r(id: u8, team: Team, x: f64, y: f64) -> RobotState {
        RobotState::new(id, team, Pose2D::new(x, y, 0.0))
    }

    fn w(robots: Vec<RobotState>, ball: (f64, f64)) -> WorldState {
        WorldState::new(robots, BallState::at_rest(Vec2::new(ball.0, ball.1)), 0.05)
    }

    fn pick(world: &WorldState) -> PolicyKind {
        select(world, 0, &FieldGeometry::default(), &SelectorConfig::default()).chosen
    }

    #[test]
    fn rule_examples() {
        let duel = w(vec![r(0, Team::Home, -1.0, 0.0), r(5, Team::Away, 0.4, 0.0)], (0.0, 0.0));
        assert_eq!(pick(&duel), PolicyKind::BallDuel);
        let alone = w(vec![r(0, Team::Home, -1.0, 0.0)], (0.0, 0.0));
        assert_eq!(pick(&alone), PolicyKind::MidField);
        let support = w(vec![r(0, Team::Home, -3.0, 0.0), r(1, Team::Home, 1.0, 0.0)], (0.0, 0.0));
        assert_eq!(pick(&support), PolicyKind::Positioning);
        let near = w(vec![r(0, Team::Home, 3.0, 0.5), r(1, Team::Home, 1.0, 0.0)], (3.5, 0.5));
        assert_eq!(pick(&near), PolicyKind::NearGoal);
    }

    #[test]
    fn fallen_teammate_does_not_trigger_positioning() {
        let mut world = w(vec![r(0, Team::Home, -3.0, 0.0), r(1, Team::Home, 1.0, 0.0)], (0.0, 0.0));
        world.robots[1].upright = false;
        assert_eq!(pick(&world), PolicyKind::MidField);
    }

    #[test]
    fn ablating_mid_field_falls_back_to_ball_duel() {
        let world = w(vec![r(0, Team::Home, -1.0, 0.0)], (0.0, 0.0));
        let (k, rule, _) = select_rule(
            &world,
            0,
            Vec2::ZERO,
            &FieldGeometry::default(),
            &SelectorConfig::default(),
            &PolicyMask::without(PolicyKind::MidField),
        );
        assert_eq!((k, rule), (PolicyKind::BallDuel, RuleId::Fallback));
    }

    #[test]
    fn hysteresis_delays_switches() {
        let mut s = Selector::new();
        assert_eq!(s.commit(PolicyKind::MidField, 3), PolicyKind::MidField);
        assert_eq!(s.commit(PolicyKind::BallDuel, 3), PolicyKind::MidField);
        assert_eq!(s.commit(PolicyKind::BallDuel, 3), PolicyKind::MidField);
        assert_eq!(s.commit(PolicyKind::BallDuel, 3), PolicyKind::BallDuel);
        assert_eq!(s.commit(PolicyKind::MidField, 3), PolicyKind::BallDuel);
        assert_eq!(s.commit(PolicyKind::NearGoal, 3), PolicyKind::BallDuel);
        assert_eq!(s.commit(PolicyKind::BallDuel, 0), PolicyKind::BallDuel);
        assert_eq!(s.commit(PolicyKind::MidField, 0), PolicyKind::MidField);
    }

    proptest! {
        #[test]
        fn hysteresis_bounds_switch_rate(seq in proptest::collection::vec(0usize..4, 1..200), h in 1u32..8) {
            let mut s = Selector::new();
            let mut switches = Vec::new();
            let mut prev = None;
            for (t, k) in seq.into_iter().enumerate() {
                let c = s.commit(PolicyKind::ALL[k], h);
                if prev.is_some_and(|p| p != c) {
                    switches.push(t);
                }
                prev = Some(c);
            }
            for pair in switches.windows(2) {
                prop_assert!(pair[1] - pair[0] >= h as usize);
            }
        }

        #[test]
        fn margin_only_grows_near_goal(bx in 2.0f64..4.6, by in -2.5f64..2.5, sx in 2.0f64..4.5, sy in -2.5f64..2.5, m in 0.0f64..1.0) {
            let world = w(vec![r(0, Team::Home, sx, sy)], (bx, by));
            let f = FieldGeometry::default();
            let base = SelectorConfig::default();
            let grown = SelectorConfig { near_goal_margin: m, ..base };
            let a = select_rule(&world, 0, world.ball.position, &f, &base, &PolicyMask::ALL).0;
            let b = select_rule(&world, 0, world.ball.position, &f, &grown, &PolicyMask::ALL).0;
            if a == PolicyKind::NearGoal {
                prop_assert_eq!(b, PolicyKind::NearGoal);
            }
        }
    }

    #[test]
    fn goalie_stands_at_area_front() {
        let f = FieldGeometry::default();
        let world = w(vec![r(2, Team::Away, 4.0, 0.0)], (0.0, 0.0));
        // Away defends +x; the line to the ball meets the area front at x = 3.9.
        let t = goalie_target(&world, Team::Away, &f);
        assert!((t.x - 3.9).abs() < 1e-12 && t.y.abs() < 1e-12);
        let world = w(vec![r(2, Team::Away, 4.0, 0.0)], (0.5, 2.0));
        let t = goalie_target(&world, Team::Away, &f);
        // Oracle: parametric intersection with the plane x = 3.9.
        let s = (3.9 - 4.5) / (0.5 - 4.5);
        assert!((t.x - 3.9).abs() < 1e-12 && (t.y - 2.0 * s).abs() < 1e-12);
        match scripted_goalie(&world, 2, false, &SimConfig::default()) {
            SkillCommand::WalkToPoint { face, .. } => {
                assert!((face - (Vec2::new(0.5, 2.0) - Vec2::new(4.0, 0.0)).angle()).abs() < 1e-12)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn goalie_clears_adjacent_ball() {
        let cfg = SimConfig::default();
        let mut goalie = RobotState::new(2, Team::Away, Pose2D::new(4.0, 0.0, std::f64::consts::PI));
        goalie.upright = true;
        let world = WorldState::new(vec![goalie], BallState::at_rest(Vec2::new(3.75, 0.0)), 0.05);
        assert!(matches!(scripted_goalie(&world, 2, false, &cfg), SkillCommand::WalkAndKick { .. }));
        assert!(matches!(scripted_goalie(&world, 2, true, &cfg), SkillCommand::WalkToPoint { .. }));
    }

    fn run_scripts(world: WorldState, scripts: &[Script], seconds: f64) -> (WorldState, bool) {
        let cfg = SimConfig::default();
        let mut sim = Simulator::new(world, cfg);
        let mut kicked = false;
        for _ in 0..(seconds / cfg.dt) as usize {
            let cmds: Vec<_> = sim
                .world
                .robots
                .iter()
                .zip(scripts)
                .map(|(rb, s)| s.command(&sim.world, rb.id, &cfg))
                .collect();
            kicked |= cmds.iter().any(|c| matches!(c, SkillCommand::WalkAndKick { .. }));
            sim.step(&cmds).unwrap();
        }
        (sim.world, kicked)
    }

    #[test]
    fn defender_blocks_center_ball() {
        let start = w(vec![r(1, Team::Away, 1.0, -2.5)], (0.0, 0.0));
        let (end, _) = run_scripts(start, &[Script::Defender { weakened: false }], 30.0);
        let f = FieldGeometry::default();
        let target = defender_target(&end, Team::Away, &f);
        assert!((target.x - 1.75).abs() < 1e-12);
        let p = end.robots[0].position();
        assert!(p.distance(target) < 0.05, "{p:?} vs {target:?}");
        // Perpendicular distance to the ball–goal line (the x axis here).
        assert!(p.y.abs() < 0.3);
    }

    #[test]
    fn weakened_scripts_never_kick() {
        let start = w(
            vec![
                r(0, Team::Home, 3.0, 0.0),
                r(1, Team::Away, 3.4, 0.0),
                RobotState::new(2, Team::Away, Pose2D::new(4.3, 0.0, std::f64::consts::PI)),
            ],
            (3.7, 0.0),
        );
        let scripts = [
            Script::BallCarrier,
            Script::Defender { weakened: true },
            Script::Goalie { weakened: true },
        ];
        let cfg = SimConfig::default();
        let mut sim = Simulator::new(start, cfg);
        for _ in 0..1200 {
            let cmds: Vec<_> = sim
                .world
                .robots
                .iter()
                .zip(&scripts)
                .map(|(rb, s)| s.command(&sim.world, rb.id, &cfg))
                .collect();
            assert!(!matches!(cmds[1], SkillCommand::WalkAndKick { .. }));
            assert!(!matches!(cmds[2], SkillCommand::WalkAndKick { .. }));
            let out = sim.step(&cmds).unwrap();
            if out.events.iter().any(|e| e.is_goal()) {
                break;
            }
        }
    }

    struct Zero;

    impl PolicyBank for Zero {
        fn act_dim(&self, kind: PolicyKind) -> usize {
            kind.spec().act_dim
        }

        fn mean_action(&self, kind: PolicyKind, _obs: &[f64], out: &mut Vec<f64>) {
            out.clear();
            out.resize(kind.spec().act_dim, 0.0);
        }
    }

    #[test]
    fn team_tick_roles_and_logging() {
        let cfg = SimConfig::default();
        let world = w(
            vec![r(0, Team::Home, -0.5, 0.0), r(1, Team::Home, -2.0, 1.0), r(7, Team::Away, 3.0, 0.0)],
            (0.0, 0.0),
        );
        let mut rt = TeamRuntime::new(&[0, 1], SelectorConfig::default(), PolicyMask::ALL);
        let mut rng = RngStreams::new(1);
        let tick = run_team_tick(&world, &mut rt, &Zero, &cfg, &mut rng).unwrap();
        assert_eq!(tick.decisions.len(), 2);
        assert_eq!(tick.decisions[0].chosen, PolicyKind::MidField);
        assert_eq!(tick.decisions[1].chosen, PolicyKind::Positioning);

        let mut rt2 = TeamRuntime::new(&[0, 1], SelectorConfig::default(), PolicyMask::ALL);
        let again = run_team_tick(&world, &mut rt2, &Zero, &cfg, &mut RngStreams::new(1)).unwrap();
        assert_eq!(tick, again);

        let mut fallen = world.clone();
        fallen.robots[1].upright = false;
        let tick = run_team_tick(&fallen, &mut rt, &Zero, &cfg, &mut rng).unwrap();
        assert_eq!(tick.decisions.len(), 1);
        assert_eq!(tick.commands[1], (1, SkillCommand::Stand));
    }
}
