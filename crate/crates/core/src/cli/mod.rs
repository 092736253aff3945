//! Command-line front end: configuration, presets and the three commands.

pub mod commands;
pub mod config;
pub mod io;
pub mod presets;

use std::path::PathBuf;

use crate::error::{Error, Result};
pub use commands::{cmd_analyze, cmd_compare, cmd_simulate, load_input};
pub use config::AnalysisConfig;

/// Resolves the effective configuration from a config file or preset plus
/// command-line overrides.
pub fn resolve_config(
    config_path: Option<&std::path::Path>,
    preset: Option<&str>,
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
) -> Result<AnalysisConfig> {
    let mut config = match (config_path, preset) {
        (Some(path), None) => AnalysisConfig::load(path)?,
        (None, Some(name)) => presets::preset(name)?,
        (Some(_), Some(_)) => return Err(Error::Config("give either --config or --preset, not both".into())),
        (None, None) => return Err(Error::Config("one of --config or --preset is required".into())),
    };
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(dir) = output_dir {
        config.output.dir = dir;
    }
    Ok(config)
}
