//! Core of a two-fidelity robot-soccer RL workbench: field geometry, the
//! stepped simulator, low-level skills, per-policy observation and action
//! codecs, rewards and training scenarios, and the heuristic behavior
//! selector with its scripted opponents.

pub mod behavior;
pub mod env;
pub mod geometry;
pub mod policy_io;
pub mod rewards;
pub mod scenario;
pub mod sim;
pub mod skills;

/// An out-of-range configuration value, identified by its dotted key path.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid config value at `{key}`: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn invalid(key: &str, message: &str) -> Self {
        Self {
            key: key.to_owned(),
            message: message.to_owned(),
        }
    }

    /// Prefixes the key path with a parent section.
    pub fn nest(mut self, parent: &str) -> Self {
        self.key = format!("{parent}.{}", self.key);
        self
    }
}
