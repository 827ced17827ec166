//! Config files: TOML with a mandatory `version = 1` header, like schedule
//! files, and one optional table per command whose keys are the long flag
//! names with dashes turned into underscores.
//!
//! ```toml
//! version = 1
//! seed = 7
//!
//! [train]
//! log = "runs/clean.log"
//! N = 40000
//! L = 500
//! energy = 0.9
//!
//! [tune]
//! L = [100, 250, 500]
//! budget = 0.05
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::args::{DetectArgs, ReportArgs, SimulateArgs, TrainArgs, TuneArgs};
use crate::error::{CliError, CliResult};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub version: u32,
    pub seed: Option<u64>,
    #[serde(default)]
    pub simulate: SimulateArgs,
    #[serde(default)]
    pub train: TrainArgs,
    #[serde(default)]
    pub detect: DetectArgs,
    #[serde(default)]
    pub tune: TuneArgs,
    #[serde(default)]
    pub report: ReportArgs,
}

pub fn parse_config(text: &str) -> Result<ConfigFile, String> {
    let config: ConfigFile = toml::from_str(text).map_err(|e| e.to_string())?;
    if config.version != CONFIG_VERSION {
        return Err(format!(
            "unsupported config version {}, expected {CONFIG_VERSION}",
            config.version
        ));
    }
    Ok(config)
}

/// Reads `path`, or returns an empty config when no file was given.
pub fn load_config(path: Option<&Path>) -> CliResult<ConfigFile> {
    let Some(path) = path else {
        return Ok(ConfigFile {
            version: CONFIG_VERSION,
            ..Default::default()
        });
    };
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("config file {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| CliError::usage(format!("config file {}: {e}", path.display())))
}
