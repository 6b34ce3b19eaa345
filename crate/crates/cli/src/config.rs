//! Run configuration: flags override the config file, which overrides defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};
use vidseal_core::{Mode, TileSize};

use crate::CliError;

pub const DEFAULT_N: usize = 8;
pub const DEFAULT_D: u32 = 23;
pub const THREADS_ENV: &str = "VIDSEAL_THREADS";

/// Contents of a `--config` file. Every field is optional; calibration output
/// from `vidseal eval` has this shape.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    /// `"WxH"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tile: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::input(format!("config {}: {e}", path.display())))
    }
}

/// Values given on the command line; `None` means not given.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub n: Option<usize>,
    pub d: Option<u32>,
    pub mode: Option<Mode>,
    pub tile: Option<TileSize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub d: u32,
    pub mode: Mode,
    pub tile: TileSize,
    pub seed: u64,
    /// 0 uses every core.
    pub threads: usize,
    /// Whether `n` / `tile` came from a flag or the config file rather than the defaults.
    pub n_explicit: bool,
    pub tile_explicit: bool,
}

impl RunConfig {
    pub fn resolve(flags: &Overrides, file: Option<&ConfigFile>) -> Result<Self, CliError> {
        let file = file.cloned().unwrap_or_default();
        let file_tile = file
            .tile
            .as_deref()
            .map(str::parse::<TileSize>)
            .transpose()
            .map_err(|e| CliError::input(format!("config tile: {e}")))?;
        let env_threads = match std::env::var(THREADS_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|e| CliError::input(format!("{THREADS_ENV}={v:?}: {e}")))?,
            ),
            Err(_) => None,
        };
        let n = flags.n.or(file.n);
        let tile = flags.tile.or(file_tile);
        let config = Self {
            n: n.unwrap_or(DEFAULT_N),
            d: flags.d.or(file.d).unwrap_or(DEFAULT_D),
            mode: flags.mode.or(file.mode).unwrap_or_default(),
            tile: tile.unwrap_or_default(),
            seed: flags.seed.or(file.seed).unwrap_or(0),
            threads: flags.threads.or(env_threads).or(file.threads).unwrap_or(0),
            n_explicit: n.is_some(),
            tile_explicit: tile.is_some(),
        };
        vidseal_core::extended_frame::validate_grid(config.n).map_err(CliError::from_core)?;
        Ok(config)
    }
}
