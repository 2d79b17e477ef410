//! Artifact writer that hashes every file and records a manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub struct Outputs {
    dir: PathBuf,
    artifacts: BTreeMap<String, String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a RunConfig,
    config_sha256: String,
    data_sha256: String,
    artifacts: &'a BTreeMap<String, String>,
}

fn sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Outputs {
    pub fn new(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir, artifacts: BTreeMap::new() })
    }

    /// Writes `name` (a path relative to the output directory).
    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        let bytes = bytes.as_ref();
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.artifacts.insert(name.to_string(), sha256(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text)
    }

    pub fn finish(self, command: &str, config: &RunConfig) -> Result<PathBuf> {
        let data = fs::read(&config.data).with_context(|| format!("reading {}", config.data.display()))?;
        let manifest = Manifest {
            tool: "fairaudit",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            config_sha256: sha256(serde_json::to_string(config)?.as_bytes()),
            data_sha256: sha256(&data),
            artifacts: &self.artifacts,
        };
        let path = self.dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(self.dir)
    }
}
