//! JSON-lines episode traces and their verification by re-simulation.
//!
//! A trace is one [`TraceTick`] per line. Next to it, `<trace>.meta.json`
//! holds the initial world, the simulator configuration (including its seed)
//! and the episode result. Feeding the recorded commands back through a fresh
//! simulator must reproduce every recorded tick bit for bit.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use soccer_core::geometry::WorldState;
use soccer_core::sim::{SimConfig, SimError, SimEvent, Simulator};

use crate::episode::{EpisodeResult, TraceTick};
use crate::experiments::{EvalError, Experiment, ExperimentKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub experiment: ExperimentKind,
    pub condition: String,
    pub episode: u64,
    pub seed: u64,
    pub sim: SimConfig,
    pub initial: WorldState,
    pub result: EpisodeResult,
    pub weights: BTreeMap<String, String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path} line {line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("tick {tick}: replayed state differs from the trace")]
    Diverged { tick: u64 },
    #[error("trace has {found} ticks, metadata says {expected}")]
    Length { expected: u64, found: u64 },
}

pub fn meta_path(trace: &Path) -> PathBuf {
    let mut s = trace.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> ReplayError + '_ {
    move |source| ReplayError::Io {
        path: path.to_owned(),
        source,
    }
}

/// Runs episode `episode` of `condition` and writes its trace and metadata.
pub fn export(exp: &Experiment<'_>, condition: &str, episode: u64, path: &Path) -> Result<TraceMeta, ReplayError> {
    let mut ticks = Vec::new();
    let (result, initial, sim) = exp.run_one(condition, episode, Some(&mut ticks))?;
    let file = std::fs::File::create(path).map_err(io(path))?;
    let mut w = BufWriter::new(file);
    for t in &ticks {
        serde_json::to_writer(&mut w, t).expect("trace tick serializes");
        w.write_all(b"\n").map_err(io(path))?;
    }
    w.flush().map_err(io(path))?;
    let meta = TraceMeta {
        experiment: exp.kind,
        condition: condition.to_owned(),
        episode,
        seed: exp.seed,
        sim,
        initial,
        result,
        weights: exp.arsenal.hashes(exp.kind),
    };
    let mp = meta_path(path);
    std::fs::write(&mp, serde_json::to_string_pretty(&meta).expect("meta serializes")).map_err(io(&mp))?;
    Ok(meta)
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceTick>, ReplayError> {
    let file = std::fs::File::open(path).map_err(io(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| ReplayError::Json {
            path: path.to_owned(),
            line: i + 1,
            source,
        })?);
    }
    Ok(out)
}

pub fn read_meta(trace: &Path) -> Result<TraceMeta, ReplayError> {
    let mp = meta_path(trace);
    let text = std::fs::read_to_string(&mp).map_err(io(&mp))?;
    serde_json::from_str(&text).map_err(|source| ReplayError::Json {
        path: mp,
        line: 1,
        source,
    })
}

/// Re-simulates a trace from its metadata and returns the events of the
/// final tick.
pub fn verify(trace: &Path) -> Result<(TraceMeta, Vec<SimEvent>), ReplayError> {
    let meta = read_meta(trace)?;
    let ticks = read_trace(trace)?;
    if ticks.len() as u64 != meta.result.ticks {
        return Err(ReplayError::Length {
            expected: meta.result.ticks,
            found: ticks.len() as u64,
        });
    }
    let mut sim = Simulator::new(meta.initial.clone(), meta.sim);
    for t in &ticks {
        let out = sim.step(&t.commands)?;
        let replayed = TraceTick::capture(&sim.world, out.events, t.commands.clone(), t.decisions.clone());
        if &replayed != t {
            return Err(ReplayError::Diverged { tick: t.tick });
        }
    }
    let last = ticks.last().map(|t| t.events.clone()).unwrap_or_default();
    Ok((meta, last))
}
