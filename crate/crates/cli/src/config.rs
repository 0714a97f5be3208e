//! Experiment config files.

use std::fs;
use std::path::Path;

use heterojive::sim::ExperimentConfig;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// A validated config and the SHA-256 of its canonical form.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub hash: String,
}

/// Reads a TOML config. `seed_override` (the `JIVE_SEED` variable) replaces
/// the seed before validation and hashing.
pub fn load_config(path: &Path, seed_override: Option<&str>) -> CliResult<LoadedConfig> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    let mut config: ExperimentConfig =
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if let Some(raw) = seed_override {
        config.seed = raw
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("JIVE_SEED: `{raw}` is not an unsigned integer")))?;
    }
    config.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let hash = config_hash(&config);
    Ok(LoadedConfig { config, hash })
}

/// Hash of the parsed config, so formatting and key order in the file do
/// not matter.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let canonical = serde_json::to_string(config).expect("config serializes");
    Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}
