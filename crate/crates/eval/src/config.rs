//! Run configuration: one TOML file with a versioned schema, layered over
//! the built-in defaults and then over `SOCCER_<SECTION>__<KEY>` environment
//! variables.

use std::path::Path;

use serde::{Deserialize, Serialize};
use soccer_core::behavior::SelectorConfig;
use soccer_core::rewards::RewardConfig;
use soccer_core::sim::SimConfig;
use soccer_core::ConfigError;
use soccer_ppo::TrainConfig;

pub const SCHEMA_VERSION: u32 = 1;
pub const ENV_PREFIX: &str = "SOCCER_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    /// Episodes per condition.
    pub episodes: usize,
    pub bootstrap_resamples: usize,
    pub ci_level: f64,
    /// Episode time limit for every experiment (s).
    pub timeout: f64,
    /// Dribble test: the ball counts as lost once it stays farther than this
    /// from the attacker ...
    pub control_distance: f64,
    /// ... for this long (s).
    pub control_loss_time: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            episodes: 200,
            bootstrap_resamples: 10_000,
            ci_level: 0.95,
            timeout: 60.0,
            control_distance: 1.5,
            control_loss_time: 5.0,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.episodes == 0 {
            return Err(ConfigError::invalid("episodes", "must be >= 1"));
        }
        if self.bootstrap_resamples < 1000 {
            return Err(ConfigError::invalid("bootstrap_resamples", "must be >= 1000"));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(ConfigError::invalid("ci_level", "must be in (0, 1)"));
        }
        for (key, v) in [
            ("timeout", self.timeout),
            ("control_distance", self.control_distance),
            ("control_loss_time", self.control_loss_time),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::invalid(key, "must be finite and > 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppConfig {
    pub schema_version: u32,
    pub sim: SimConfig,
    pub rewards: RewardConfig,
    pub selector: SelectorConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

/// Training settings used by the shipped recipes: the PPO defaults with the
/// entropy bonus off and ten epochs per update, stopping once 85% of the last
/// 100 episodes score.
pub fn tuned_train_config() -> TrainConfig {
    TrainConfig {
        entropy_coef: 0.0,
        epochs_per_update: 10,
        stop_at_goal_rate: Some(0.85),
        ..TrainConfig::default()
    }
}

impl Default for AppConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            sim: SimConfig::default(),
            rewards: RewardConfig::default(),
            selector: SelectorConfig::default(),
            train: tuned_train_config(),
            eval: EvalConfig::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigLoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("unsupported schema_version {0} (expected {SCHEMA_VERSION})")]
    Schema(i64),
    #[error("environment override {var}: {message}")]
    Env { var: String, message: String },
    #[error(transparent)]
    Invalid(#[from] ConfigError),
}

impl AppConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ConfigError::invalid("schema_version", "unsupported version"));
        }
        self.sim.validate().map_err(|e| e.nest("sim"))?;
        self.rewards.validate().map_err(|e| e.nest("rewards"))?;
        self.selector.validate().map_err(|e| e.nest("selector"))?;
        self.train.validate().map_err(|e| e.nest("train"))?;
        self.eval.validate().map_err(|e| e.nest("eval"))?;
        Ok(())
    }

    pub fn dump(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes to TOML")
    }

    /// Parses a config document. Missing keys keep their defaults; unknown
    /// keys are errors.
    pub fn from_toml(text: &str) -> Result<Self, ConfigLoadError> {
        Self::layered(Some(text), std::iter::empty())
    }

    /// Defaults, then the file at `path` (if any), then environment
    /// overrides from `vars`, then validation.
    pub fn load(
        path: Option<&Path>,
        vars: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, ConfigLoadError> {
        let text = match path {
            Some(p) => Some(std::fs::read_to_string(p).map_err(|source| ConfigLoadError::Io {
                path: p.display().to_string(),
                source,
            })?),
            None => None,
        };
        Self::layered(text.as_deref(), vars)
    }

    fn layered(text: Option<&str>, vars: impl IntoIterator<Item = (String, String)>) -> Result<Self, ConfigLoadError> {
        let mut merged = toml::Table::try_from(AppConfig::default()).expect("defaults serialize");
        if let Some(text) = text {
            let file: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigLoadError::Parse(e.to_string()))?;
            match file.get("schema_version") {
                Some(toml::Value::Integer(v)) if *v == SCHEMA_VERSION as i64 => {}
                Some(toml::Value::Integer(v)) => return Err(ConfigLoadError::Schema(*v)),
                Some(_) => return Err(ConfigLoadError::Parse("schema_version must be an integer".into())),
                None => return Err(ConfigLoadError::Parse("missing schema_version".into())),
            }
            merge(&mut merged, file);
        }
        for (var, raw) in vars {
            let Some(rest) = var.strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let path: Vec<String> = rest.split("__").map(str::to_ascii_lowercase).collect();
            set_path(&mut merged, &path, parse_scalar(&raw)).map_err(|message| ConfigLoadError::Env {
                var: var.clone(),
                message,
            })?;
        }
        // Round-trip through text so deserialization errors carry line and
        // key context.
        let text = toml::to_string(&merged).expect("merged table serializes");
        let cfg: AppConfig = toml::from_str(&text).map_err(|e| ConfigLoadError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn parse_scalar(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_owned()))
}

fn set_path(table: &mut toml::Table, path: &[String], value: toml::Value) -> Result<(), String> {
    let (last, parents) = path.split_last().ok_or("empty key")?;
    let mut cur = table;
    for (i, p) in parents.iter().enumerate() {
        cur = match cur.get_mut(p) {
            Some(toml::Value::Table(t)) => t,
            _ => return Err(format!("unknown section `{}`", path[..=i].join("."))),
        };
    }
    if !cur.contains_key(last.as_str()) && !is_optional_key(path) {
        return Err(format!("unknown key `{}`", path.join(".")));
    }
    cur.insert(last.clone(), value);
    Ok(())
}

/// Keys that are absent from a dump because their default is unset.
fn is_optional_key(path: &[String]) -> bool {
    path == ["train", "stop_at_goal_rate"]
}
