//! Per-experiment results: a table for the terminal and a JSON document that
//! carries enough to rerun itself.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::config::{AppConfig, EvalConfig};
use crate::episode::{EpisodeResult, Outcome};
use crate::experiments::ExperimentKind;
use crate::stats::{bootstrap_ci, Interval, StatsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub name: String,
    pub episodes: usize,
    pub successes: usize,
    pub success_ci: Interval,
    pub ci_half_width: f64,
    /// Mean episode time over successful episodes (s).
    pub mean_time_to_success: Option<f64>,
    pub outcomes: BTreeMap<Outcome, usize>,
}

impl ConditionReport {
    pub fn from_results(name: &str, results: &[EpisodeResult], eval: &EvalConfig, seed: u64) -> Result<Self, StatsError> {
        let flags: Vec<bool> = results.iter().map(|r| r.success).collect();
        let ci = bootstrap_ci(&flags, eval.bootstrap_resamples, eval.ci_level, seed)?;
        let times: Vec<f64> = results.iter().filter(|r| r.success).map(|r| r.time).collect();
        let mut outcomes = BTreeMap::new();
        for r in results {
            *outcomes.entry(r.outcome).or_insert(0) += 1;
        }
        Ok(Self {
            name: name.to_owned(),
            episodes: results.len(),
            successes: times.len(),
            ci_half_width: ci.half_width(),
            success_ci: ci,
            mean_time_to_success: (!times.is_empty()).then(|| times.iter().sum::<f64>() / times.len() as f64),
            outcomes,
        })
    }

    pub fn rate(&self) -> f64 {
        self.success_ci.mean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub episodes: usize,
    pub conditions: Vec<ConditionReport>,
    /// Content hash of every weight file used, by file name.
    pub weights: BTreeMap<String, String>,
    pub config: AppConfig,
}

impl EvalReport {
    pub fn condition(&self, name: &str) -> Option<&ConditionReport> {
        self.conditions.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Content hash of the JSON form.
    pub fn hash(&self) -> String {
        soccer_ppo::weights::content_hash(self.to_json().as_bytes())
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} (seed {}, {} episodes per condition)", self.experiment, self.seed, self.episodes);
        let _ = writeln!(
            s,
            "{:<32} {:>9} {:>7} {:>17} {:>10}  outcomes",
            "condition", "successes", "rate", "95% CI", "mean t (s)"
        );
        for c in &self.conditions {
            let time = c.mean_time_to_success.map_or("-".to_owned(), |t| format!("{t:.2}"));
            let outcomes: Vec<String> = c.outcomes.iter().map(|(o, n)| format!("{o:?}={n}")).collect();
            let _ = writeln!(
                s,
                "{:<32} {:>4}/{:<4} {:>7.3} [{:.3}, {:.3}] ±{:.3} {:>10}  {}",
                c.name,
                c.successes,
                c.episodes,
                c.rate(),
                c.success_ci.lo,
                c.success_ci.hi,
                c.ci_half_width,
                time,
                outcomes.join(" ")
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(success: bool, outcome: Outcome, time: f64) -> EpisodeResult {
        EpisodeResult {
            success,
            outcome,
            time,
            ticks: (time / 0.05) as u64,
        }
    }

    #[test]
    fn condition_summary() {
        let rs = [
            result(true, Outcome::Goal, 10.0),
            result(false, Outcome::Timeout, 60.0),
            result(true, Outcome::Goal, 20.0),
            result(false, Outcome::OutOfBounds, 5.0),
        ];
        let c = ConditionReport::from_results("full", &rs, &EvalConfig::default(), 0).unwrap();
        assert_eq!(c.successes, 2);
        assert_eq!(c.rate(), 0.5);
        assert_eq!(c.mean_time_to_success, Some(15.0));
        assert_eq!(c.outcomes[&Outcome::Goal], 2);
        assert!(c.success_ci.lo >= 0.0 && c.success_ci.hi <= 1.0);
    }

    #[test]
    fn no_successes_has_no_time() {
        let rs = [result(false, Outcome::Timeout, 60.0)];
        let c = ConditionReport::from_results("x", &rs, &EvalConfig::default(), 0).unwrap();
        assert_eq!(c.mean_time_to_success, None);
        assert_eq!(c.ci_half_width, 0.0);
    }
}
