//! Batch runner for the parex experiments: `parex <subcommand> --config path [--set key=value ...] --out dir`.

pub mod commands;
pub mod config;
pub mod criteria;
pub mod outcome;
pub mod output;

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

pub use commands::Subcommand;
pub use outcome::{exit, Check, CliError, RunOutput, Verdict};

/// Resolve the config, run one subcommand and write its outputs.
/// Config errors are raised before anything is written.
pub fn run(sub: Subcommand, config: Option<&Path>, sets: &[String], out_dir: &Path) -> Result<RunOutput, CliError> {
    let resolved = config::resolve_path(config, sets)?;
    if let Some(name) = &resolved.config.subcommand {
        if name != sub.name() {
            return Err(CliError::Schema(format!("config is for `{name}`, not `{}`", sub.name())));
        }
    }
    let out = sub.run(&resolved.config)?;
    let ts = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    output::write_all(out_dir, sub.name(), &resolved.hash, &resolved.canonical, ts, &out)?;
    Ok(out)
}

/// Cap the worker pool; `PAREX_THREADS` unset or unparsable leaves the default.
pub fn init_threads() {
    if let Some(n) = std::env::var("PAREX_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}
