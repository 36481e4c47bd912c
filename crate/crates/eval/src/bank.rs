//! Loaded sub-policy weights, served as deterministic mean actions.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use soccer_core::behavior::PolicyBank;
use soccer_core::policy_io::PolicyKind;
use soccer_core::sim::Fidelity;
use soccer_ppo::net::Workspace;
use soccer_ppo::weights::WeightsError;
use soccer_ppo::PolicyWeights;

/// File name of a policy's weights inside a weights directory. NEAR_GOAL
/// has one file per training fidelity; the HIGH one is the default.
pub fn weights_file(kind: PolicyKind, fidelity: Option<Fidelity>) -> String {
    let base = kind.as_str().to_ascii_lowercase();
    match (kind, fidelity) {
        (PolicyKind::NearGoal, Some(f)) => format!("{base}_{}.bin", f.to_string().to_ascii_lowercase()),
        (PolicyKind::NearGoal, None) => format!("{base}_high.bin"),
        _ => format!("{base}.bin"),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BankError {
    #[error("missing weights for {kind}: {path}")]
    Missing { kind: PolicyKind, path: PathBuf },
    #[error("{path}: {source}")]
    Load { path: PathBuf, source: WeightsError },
}

pub fn load_weights(dir: &Path, kind: PolicyKind, fidelity: Option<Fidelity>) -> Result<PolicyWeights, BankError> {
    let path = dir.join(weights_file(kind, fidelity));
    if !path.exists() {
        return Err(BankError::Missing { kind, path });
    }
    PolicyWeights::load_for(&path, kind).map_err(|source| BankError::Load { path, source })
}

/// Up to one network per sub-policy.
#[derive(Debug, Clone, Default)]
pub struct PolicySet {
    slots: [Option<PolicyWeights>; 4],
}

impl PolicySet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, w: PolicyWeights) -> Self {
        self.insert(w);
        self
    }

    pub fn insert(&mut self, w: PolicyWeights) {
        let i = w.header.policy_name as usize;
        self.slots[i] = Some(w);
    }

    pub fn get(&self, kind: PolicyKind) -> Option<&PolicyWeights> {
        self.slots[kind as usize].as_ref()
    }

    /// Loads the four sub-policies (HIGH-trained NEAR_GOAL) from `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self, BankError> {
        let mut set = Self::new();
        for kind in PolicyKind::ALL {
            set.insert(load_weights(dir, kind, None)?);
        }
        Ok(set)
    }

    /// Content hash of every loaded file, keyed by policy name.
    pub fn hashes(&self) -> BTreeMap<String, String> {
        self.slots
            .iter()
            .flatten()
            .map(|w| (w.header.policy_name.to_string(), w.content_hash()))
            .collect()
    }

    /// A per-thread view with its own scratch buffers.
    pub fn view(&self) -> BankView<'_> {
        BankView {
            set: self,
            ws: RefCell::new(Workspace::default()),
        }
    }
}

pub struct BankView<'a> {
    set: &'a PolicySet,
    ws: RefCell<Workspace>,
}

impl PolicyBank for BankView<'_> {
    fn act_dim(&self, kind: PolicyKind) -> usize {
        kind.spec().act_dim
    }

    /// A missing policy acts with zeros.
    fn mean_action(&self, kind: PolicyKind, obs: &[f64], out: &mut Vec<f64>) {
        match self.set.get(kind) {
            Some(w) => w.net.act_deterministic(obs, &mut self.ws.borrow_mut(), out),
            None => {
                out.clear();
                out.resize(kind.spec().act_dim, 0.0);
            }
        }
    }
}
