//! Training recipes: which scenario each sub-policy learns in, and writing
//! the resulting weights and learning curve.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use soccer_core::policy_io::PolicyKind;
use soccer_core::scenario::{ScenarioKind, ScenarioSpec};
use soccer_core::sim::Fidelity;
use soccer_ppo::train::{write_curve, TrainError};
use soccer_ppo::{train, ActorCritic, CurveRow, PolicyWeights, TrainConfig, TrainOutcome};

use crate::bank::weights_file;
use crate::config::AppConfig;

/// The training scenario of `kind`, optionally at a non-default fidelity.
pub fn recipe(kind: PolicyKind, fidelity: Option<Fidelity>) -> ScenarioSpec {
    let spec = ScenarioSpec::new(ScenarioKind::for_policy(kind));
    match fidelity {
        Some(f) => spec.with_fidelity(f),
        None => spec,
    }
}

/// The full set the experiments need: the four sub-policies plus the
/// LOW-trained NEAR_GOAL variant.
pub const FULL_SET: [(PolicyKind, Option<Fidelity>); 5] = [
    (PolicyKind::MidField, None),
    (PolicyKind::BallDuel, None),
    (PolicyKind::NearGoal, Some(Fidelity::High)),
    (PolicyKind::NearGoal, Some(Fidelity::Low)),
    (PolicyKind::Positioning, None),
];

pub struct Trained {
    pub outcome: TrainOutcome,
    pub weights: PolicyWeights,
}

/// Trains `kind` with `train` settings from `config`.
pub fn train_policy(
    config: &AppConfig,
    kind: PolicyKind,
    fidelity: Option<Fidelity>,
    train_cfg: &TrainConfig,
    on_update: impl FnMut(&CurveRow, &ActorCritic),
) -> Result<Trained, TrainError> {
    let spec = recipe(kind, fidelity);
    let outcome = train(&spec, &config.sim, &config.rewards, train_cfg, on_update)?;
    let meta = BTreeMap::from([
        ("scenario".to_owned(), spec.kind.as_str().to_owned()),
        ("fidelity".to_owned(), spec.fidelity.to_string()),
        ("seed".to_owned(), train_cfg.seed.to_string()),
        ("steps".to_owned(), outcome.steps.to_string()),
    ]);
    let weights = PolicyWeights::new(kind, outcome.net.clone(), meta);
    Ok(Trained { outcome, weights })
}

/// Writes `<dir>/<weights file>` and the matching `.curve.csv`; returns the
/// weights path.
pub fn save(dir: &Path, kind: PolicyKind, fidelity: Option<Fidelity>, t: &Trained) -> anyhow::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(weights_file(kind, fidelity));
    t.weights.save(&path)?;
    let curve = path.with_extension("curve.csv");
    write_curve(&t.outcome.curve, std::fs::File::create(curve)?)?;
    Ok(path)
}
