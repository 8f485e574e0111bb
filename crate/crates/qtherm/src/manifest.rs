//! Run manifests written next to every output.

use std::path::{Path, PathBuf};

use qtherm_core::model::PhysicalConstants;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub artifact_version: String,
    pub constants_table: String,
    /// SHA-256 of the canonical JSON form of the resolved input.
    pub config_digest: String,
    pub seed: u64,
    /// `flag`, `config` or `random`.
    pub seed_source: String,
    pub workers: Option<usize>,
    pub started_at: String,
    pub finished_at: String,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    /// Subcommand-specific details: resolved config, sweep seeds, fits.
    pub details: serde_json::Value,
}

impl RunManifest {
    pub fn new(subcommand: &str, input: &impl Serialize, seed: u64, seed_source: &str) -> Self {
        RunManifest {
            subcommand: subcommand.into(),
            artifact_version: ARTIFACT_VERSION.into(),
            constants_table: PhysicalConstants::TABLE_VERSION.into(),
            config_digest: digest(input),
            seed,
            seed_source: seed_source.into(),
            workers: None,
            started_at: now(),
            finished_at: String::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            details: serde_json::Value::Null,
        }
    }

    pub fn finish(&mut self) {
        self.finished_at = now();
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

pub fn digest(input: &impl Serialize) -> String {
    let bytes = serde_json::to_vec(input).expect("input serializes");
    hex::encode(Sha256::digest(bytes))
}
