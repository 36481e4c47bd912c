//! Weights file: one line of JSON header, a newline, then the parameters as
//! contiguous little-endian `f32`.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use soccer_core::policy_io::PolicyKind;

use crate::net::{ActorCritic, LAYOUT_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsHeader {
    pub layout_version: u32,
    pub policy_name: PolicyKind,
    pub obs_dim: usize,
    pub act_dim: usize,
    pub actor_layers: Vec<usize>,
    pub critic_layers: Vec<usize>,
    pub param_count: usize,
    /// Free-form provenance (scenario, fidelity, seed, steps).
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

/// A network with the policy it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyWeights {
    pub header: WeightsHeader,
    pub net: ActorCritic,
}

#[derive(Debug, thiserror::Error)]
pub enum WeightsError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("unsupported layout version {0}")]
    Version(u32),
    #[error("{what}: header says {header}, found {found}")]
    Mismatch {
        what: &'static str,
        header: usize,
        found: usize,
    },
    #[error("{0} weights do not fit the policy's observation/action sizes")]
    WrongPolicy(PolicyKind),
}

impl PolicyWeights {
    pub fn new(policy: PolicyKind, net: ActorCritic, meta: BTreeMap<String, String>) -> Self {
        Self {
            header: WeightsHeader {
                layout_version: LAYOUT_VERSION,
                policy_name: policy,
                obs_dim: net.obs_dim,
                act_dim: net.act_dim,
                actor_layers: net.actor_sizes().to_vec(),
                critic_layers: net.critic_sizes().to_vec(),
                param_count: net.param_count(),
                meta,
            },
            net,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec(&self.header).expect("header serializes");
        out.push(b'\n');
        for p in &self.net.params {
            out.extend_from_slice(&(*p as f32).to_le_bytes());
        }
        out
    }

    pub fn read<R: Read>(reader: R) -> Result<Self, WeightsError> {
        let mut r = BufReader::new(reader);
        let mut line = Vec::new();
        r.read_until(b'\n', &mut line)?;
        let header: WeightsHeader = serde_json::from_slice(&line)?;
        if header.layout_version != LAYOUT_VERSION {
            return Err(WeightsError::Version(header.layout_version));
        }
        let hidden = &header.actor_layers[1..header.actor_layers.len().saturating_sub(1)];
        let mut net = ActorCritic::new(header.obs_dim, header.act_dim, hidden);
        if net.param_count() != header.param_count {
            return Err(WeightsError::Mismatch {
                what: "parameter count",
                header: header.param_count,
                found: net.param_count(),
            });
        }
        let mut raw = Vec::new();
        r.read_to_end(&mut raw)?;
        if raw.len() != header.param_count * 4 {
            return Err(WeightsError::Mismatch {
                what: "payload bytes",
                header: header.param_count * 4,
                found: raw.len(),
            });
        }
        for (p, c) in net.params.iter_mut().zip(raw.chunks_exact(4)) {
            *p = f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64;
        }
        Ok(Self { header, net })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, WeightsError> {
        Self::read(std::fs::File::open(path)?)
    }

    /// Loads and checks the dimensions against `expected`'s layout.
    pub fn load_for(path: impl AsRef<Path>, expected: PolicyKind) -> Result<Self, WeightsError> {
        let w = Self::load(path)?;
        let spec = expected.spec();
        if w.header.policy_name != expected || w.net.obs_dim != spec.obs_dim || w.net.act_dim != spec.act_dim {
            return Err(WeightsError::WrongPolicy(w.header.policy_name));
        }
        Ok(w)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), WeightsError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    /// Git-blob-style content hash: SHA-256 of `"blob <len>\0"` followed by
    /// the serialized file.
    pub fn content_hash(&self) -> String {
        content_hash(&self.to_bytes())
    }
}

pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_rounds_to_f32() {
        let net = ActorCritic::random(12, 3, &[64, 64], &mut ChaCha8Rng::seed_from_u64(0));
        let w = PolicyWeights::new(PolicyKind::NearGoal, net.clone(), BTreeMap::new());
        let bytes = w.to_bytes();
        let back = PolicyWeights::read(bytes.as_slice()).unwrap();
        assert_eq!(back.header, w.header);
        for (a, b) in back.net.params.iter().zip(&net.params) {
            assert_eq!(*a, *b as f32 as f64);
        }
        // Re-serializing the f32-rounded weights is byte-identical.
        assert_eq!(back.to_bytes(), bytes);
        assert_eq!(back.content_hash(), w.content_hash());
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let net = ActorCritic::random(12, 3, &[8], &mut ChaCha8Rng::seed_from_u64(0));
        let mut bytes = PolicyWeights::new(PolicyKind::NearGoal, net, BTreeMap::new()).to_bytes();
        bytes.truncate(bytes.len() - 4);
        assert!(matches!(
            PolicyWeights::read(bytes.as_slice()),
            Err(WeightsError::Mismatch { what: "payload bytes", .. })
        ));
    }

    #[test]
    fn hash_uses_blob_framing() {
        // sha256(b"blob 6\0hello\n"), computed independently.
        assert_eq!(
            content_hash(b"hello\n"),
            "2cf8d83d9ee29543b34a87727421fdecb7e3f3a183d337639025de576db9ebb4"
        );
    }
}
