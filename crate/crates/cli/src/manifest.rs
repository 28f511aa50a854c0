//! Run manifests: configuration, hashes of inputs and outputs, diagnostics.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use squeeze_core::io::write_json;
use squeeze_core::Result;

use crate::config::RunConfig;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of the canonical JSON form of a configuration.
pub fn config_hash(cfg: &RunConfig) -> String {
    sha256_hex(serde_json::to_string(cfg).expect("config serializes").as_bytes())
}

pub fn file_hash(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub exec: String,
    pub wall_time_s: f64,
    pub status: String,
    pub error: Option<String>,
    pub diagnostics: Value,
    pub outputs: Vec<OutputFile>,
}

impl Manifest {
    pub fn new(command: &str, config: &RunConfig, exec: &str) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: config.clone(),
            config_hash: config_hash(config),
            seed: (config.solver.method == crate::config::Method::Dtwa).then_some(config.solver.seed),
            exec: exec.into(),
            wall_time_s: 0.0,
            status: "running".into(),
            error: None,
            diagnostics: Value::Null,
            outputs: Vec::new(),
        }
    }

    pub fn add_output(&mut self, path: &Path) -> Result<()> {
        self.outputs.push(OutputFile { path: path.to_path_buf(), sha256: file_hash(path)? });
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(self, path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }

    /// A finished run whose outputs are still on disk unchanged.
    pub fn is_complete_for(&self, cfg: &RunConfig) -> bool {
        self.status == "ok"
            && self.config_hash == config_hash(cfg)
            && self.outputs.iter().all(|o| file_hash(&o.path).is_ok_and(|h| h == o.sha256))
    }
}

pub fn manifest_path(dir: &Path, stem: &str) -> PathBuf {
    dir.join(format!("{stem}.manifest.json"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_deterministic_and_sensitive() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.solver.seed += 1;
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
