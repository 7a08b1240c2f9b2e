//! TOML configuration loading, the seed override and the desk-scale overlay.

use std::path::{Path, PathBuf};

use relay_noma_core::scenario::{ConfigError, ScenarioConfig};

/// Environment variable that replaces the configured seed.
pub const SEED_ENV: &str = "RNOMA_SEED";

/// Desk-scale cell count.
pub const DESK_CELLS: usize = 16;
/// Desk-scale satellite count.
pub const DESK_SATELLITES: usize = 3;
/// Desk-scale Monte-Carlo trials.
pub const DESK_TRIALS: usize = 20;

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Invalid { path: PathBuf, source: ConfigError },
    #[error("{SEED_ENV}={value} is not an unsigned integer")]
    SeedEnv { value: String },
}

/// A parsed config plus the top-level keys the file set explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: ScenarioConfig,
    pub explicit: Vec<String>,
}

/// Parse config text. Absent keys take the defaults.
pub fn parse_config(text: &str, path: &Path) -> Result<LoadedConfig, LoadError> {
    let table: toml::Table =
        toml::from_str(text).map_err(|e| LoadError::Parse { path: path.into(), message: e.to_string() })?;
    let explicit = table.keys().cloned().collect();
    let config: ScenarioConfig =
        toml::from_str(text).map_err(|e| LoadError::Parse { path: path.into(), message: e.to_string() })?;
    config.validate().map_err(|source| LoadError::Invalid { path: path.into(), source })?;
    Ok(LoadedConfig { config, explicit })
}

pub fn load_config(path: &Path) -> Result<LoadedConfig, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.into(), source })?;
    parse_config(&text, path)
}

/// Defaults when no file is given.
pub fn default_config() -> LoadedConfig {
    LoadedConfig { config: ScenarioConfig::default(), explicit: Vec::new() }
}

/// Apply `RNOMA_SEED` if it is set.
pub fn apply_seed_env(config: &mut ScenarioConfig) -> Result<(), LoadError> {
    match std::env::var(SEED_ENV) {
        Ok(value) => {
            config.seed = value.trim().parse().map_err(|_| LoadError::SeedEnv { value })?;
            Ok(())
        }
        Err(_) => Ok(()),
    }
}

/// Shrink to desk scale, leaving keys the file set explicitly alone.
pub fn desk_scale(loaded: &LoadedConfig) -> ScenarioConfig {
    let mut c = loaded.config.clone();
    if !loaded.explicit.iter().any(|k| k == "num_cells") {
        c.num_cells = DESK_CELLS;
        if !loaded.explicit.iter().any(|k| k == "grid_rows") {
            c.grid_rows = None;
        }
    }
    if !loaded.explicit.iter().any(|k| k == "num_satellites") {
        c.num_satellites = DESK_SATELLITES;
    }
    c
}
