//! Per-stage record of input hashes, used to skip reruns with unchanged inputs.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::jsonl;

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn hash_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// SHA-256 of a file's contents; a missing file hashes to `"absent"`.
pub fn hash_file(path: &Path) -> Result<String> {
    let mut f = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok("absent".into()),
        Err(e) => return Err(Error::io(format!("opening {}", path.display()), e)),
    };
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f
            .read(&mut buf)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Input path to content hash; the stage's config slice is keyed `config`.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<PathBuf>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Freshness {
    /// Recorded inputs match and every output exists.
    Fresh,
    /// No record, or an output is missing.
    Unknown,
    /// Recorded, but these inputs changed.
    Stale(Vec<String>),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub stages: BTreeMap<String, StageRecord>,
}

impl Manifest {
    pub fn load(work_dir: &Path) -> Result<Self> {
        let path = work_dir.join(MANIFEST_FILE);
        match std::fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| Error::Parse {
                path,
                line: e.line(),
                message: e.to_string(),
            }),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Manifest::default()),
            Err(e) => Err(Error::io(format!("reading {}", path.display()), e)),
        }
    }

    pub fn save(&self, work_dir: &Path) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(self).map_err(|e| Error::validation(e.to_string()))?;
        bytes.push(b'\n');
        jsonl::write_atomic(&work_dir.join(MANIFEST_FILE), &bytes)
    }

    pub fn freshness(&self, stage: &str, inputs: &BTreeMap<String, String>) -> Freshness {
        let Some(rec) = self.stages.get(stage) else {
            return Freshness::Unknown;
        };
        if !rec.outputs.iter().all(|p| p.exists()) {
            return Freshness::Unknown;
        }
        let mut changed: Vec<String> = inputs
            .iter()
            .filter(|(k, v)| rec.inputs.get(*k) != Some(v))
            .map(|(k, _)| k.clone())
            .collect();
        changed.extend(rec.inputs.keys().filter(|k| !inputs.contains_key(*k)).cloned());
        if changed.is_empty() {
            Freshness::Fresh
        } else {
            Freshness::Stale(changed)
        }
    }

    pub fn record(&mut self, stage: &str, record: StageRecord) {
        self.stages.insert(stage.to_string(), record);
    }
}
