//! Experiment configuration files.
//!
//! ```toml
//! output_dir = "out"
//!
//! [scenario]
//! runs = 10
//! consumer_price_range = [100.0, 250.0]
//!
//! [scenario.shape]
//! num_consumers = 300
//!
//! [engine]
//! rounds = 100
//! master_seed = 7
//! solver_mode = "heuristic"
//! ```
//!
//! Every key is optional; missing ones take their defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::EngineConfig;
use crate::error::{Error, Result};
use crate::scenario::ScenarioConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub engine: EngineConfig,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenario: ScenarioConfig::default(),
            engine: EngineConfig::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.engine.validate()
    }
}
