//! Run manifests written next to every command's outputs.

use std::path::{Path, PathBuf};
use std::time::SystemTime;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::failure::Failure;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to re-run a command: its arguments, the fully resolved
/// config (usable as `--config`), the seeds it used and what it wrote.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub config: Value,
    pub seeds: Vec<u64>,
    /// Paths relative to the manifest's directory.
    pub artifacts: Vec<String>,
    pub tool_version: String,
    pub started_at: String,
    pub finished_at: String,
}

pub struct ManifestBuilder {
    command: String,
    started: SystemTime,
}

impl ManifestBuilder {
    pub fn start(command: &str) -> ManifestBuilder {
        ManifestBuilder {
            command: command.to_string(),
            started: SystemTime::now(),
        }
    }

    /// Writes `<dir>/manifest.json`, listing `artifacts` relative to `dir`.
    pub fn finish(self, dir: &Path, config: Value, seeds: Vec<u64>, artifacts: &[PathBuf]) -> Result<RunManifest, Failure> {
        let manifest = RunManifest {
            command: self.command,
            argv: std::env::args().collect(),
            config,
            seeds,
            artifacts: artifacts
                .iter()
                .map(|p| p.strip_prefix(dir).unwrap_or(p).to_string_lossy().into_owned())
                .collect(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_at: humantime::format_rfc3339_seconds(self.started).to_string(),
            finished_at: humantime::format_rfc3339_seconds(SystemTime::now()).to_string(),
        };
        cbl_core::fsio::write_json(&dir.join(MANIFEST_FILE), &manifest)?;
        Ok(manifest)
    }
}
