use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::{file_sha256, sibling, write_atomic};
use crate::error::Result;

/// Record of one CLI invocation: every parameter, the seed, and hashes of what it wrote.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub master_seed: u64,
    pub tol: f64,
    pub workers: usize,
    /// Command-specific parameters (dataset spec, grid, label options, ...).
    pub params: serde_json::Value,
    /// Hashes of the files this run consumed.
    pub inputs: BTreeMap<String, String>,
    /// Hashes of the files this run produced.
    pub artifacts: BTreeMap<String, String>,
    #[serde(default)]
    pub notes: BTreeMap<String, serde_json::Value>,
    pub started_unix: u64,
    pub finished_unix: u64,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl RunManifest {
    pub fn new(command: &str, master_seed: u64, tol: f64, workers: usize, params: serde_json::Value) -> Self {
        let t = now();
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed,
            tol,
            workers,
            params,
            inputs: BTreeMap::new(),
            artifacts: BTreeMap::new(),
            notes: BTreeMap::new(),
            started_unix: t,
            finished_unix: t,
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), file_sha256(path)?);
        Ok(())
    }

    pub fn add_artifact(&mut self, path: &Path) -> Result<()> {
        self.artifacts.insert(path.display().to_string(), file_sha256(path)?);
        Ok(())
    }

    pub fn note<T: Serialize>(&mut self, key: &str, value: &T) -> Result<()> {
        self.notes.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    /// Path of the manifest that accompanies `artifact`.
    pub fn path_for(artifact: &Path) -> std::path::PathBuf {
        sibling(artifact, ".manifest.json")
    }

    /// Stamps the finish time and writes next to `artifact`.
    pub fn finish(mut self, artifact: &Path) -> Result<()> {
        self.finished_unix = now();
        write_atomic(&Self::path_for(artifact), serde_json::to_string_pretty(&self)?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn written_next_to_artifact() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("d.jsonl");
        std::fs::write(&data, "x\n").unwrap();
        let mut m = RunManifest::new("gen", 3, 1e-7, 1, serde_json::json!({"count": 1}));
        m.add_artifact(&data).unwrap();
        m.clone().finish(&data).unwrap();
        let back = RunManifest::load(&dir.path().join("d.jsonl.manifest.json")).unwrap();
        assert_eq!(back.master_seed, 3);
        assert_eq!(back.artifacts, m.artifacts);
    }
}
