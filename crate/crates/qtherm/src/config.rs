//! TOML simulation configs.

use std::path::Path;

use qtherm_core::model::{ApparatusModel, PulseModel, QubitModel};
use qtherm_core::sim::{Protocol, SimConfig};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// On-disk simulation config. The seed is optional; the command line can
/// supply or override it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub qubit: QubitModel,
    pub apparatus: ApparatusModel,
    #[serde(default)]
    pub pulses: PulseModel,
    pub n_shots: u64,
    #[serde(default)]
    pub tau: f64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_protocol")]
    pub protocol: Protocol,
}

fn default_protocol() -> Protocol {
    Protocol::Correlation
}

impl ConfigFile {
    pub fn sim_config(&self, seed: u64) -> SimConfig {
        SimConfig {
            qubit: self.qubit,
            apparatus: self.apparatus,
            pulses: self.pulses,
            n_shots: self.n_shots,
            tau: self.tau,
            seed,
        }
    }

    pub fn validate(&self) -> qtherm_core::Result<()> {
        self.sim_config(self.seed.unwrap_or(0)).validate()?;
        self.protocol.validate()
    }
}

pub fn parse_config(text: &str, path: &Path) -> Result<ConfigFile> {
    let config: ConfigFile = toml::from_str(text).map_err(|e| Error::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    config.validate().map_err(|e| Error::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path)
}
