//! Artifact writing: every command emits its files plus a manifest with
//! sha256 content hashes, sufficient for bit-exact replay.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

/// Collects artifact bytes, writes them under the output directory, and
/// finishes with a manifest embedding the resolved configuration.
pub struct ArtifactSet {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl ArtifactSet {
    pub fn new(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn add_bytes(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn add_json<S: Serialize>(&mut self, name: &str, value: &S) -> serde_json::Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.add_bytes(name, text.into_bytes());
        Ok(())
    }

    /// Writes all files plus `manifest.json`; returns the name → sha256 map.
    pub fn finish(
        self,
        command: &str,
        label: &str,
        config: &RunConfig,
        extra: serde_json::Value,
    ) -> std::io::Result<BTreeMap<String, String>> {
        let mut hashes = BTreeMap::new();
        for (name, bytes) in &self.files {
            hashes.insert(name.clone(), sha256_hex(bytes));
            fs::write(self.dir.join(name), bytes)?;
        }
        let manifest = serde_json::json!({
            "command": command,
            "label": label,
            "master_seed": config.master_seed,
            "generator_id": sgs_core::prng::GENERATOR_ID,
            "artifacts": hashes,
            "extra": extra,
            "config": config,
        });
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        fs::write(self.dir.join("manifest.json"), text)?;
        Ok(hashes)
    }
}
