//! Evaluation harness: run configuration, the ablation, fidelity and
//! action-space experiments with bootstrap confidence intervals, replay
//! traces, roster files and the simulator self-test.

pub mod bank;
pub mod config;
pub mod episode;
pub mod experiments;
pub mod replay;
pub mod report;
pub mod roster;
pub mod selftest;
pub mod stats;
pub mod training;

pub use config::AppConfig;
pub use experiments::{Arsenal, EvalError, Experiment, ExperimentKind};
pub use report::EvalReport;
pub use stats::{bootstrap_ci, Interval};
