//! Command-line front end for the `dcf-mrp` analyses and simulators.
//!
//! A run is described by `key=value` entries read from a configuration
//! file, from positional `key=value` arguments and from flags, in increasing
//! order of precedence. See [`config`] for the keys and [`run`] for the CSV
//! tables each mode writes.

pub mod config;
pub mod error;
pub mod run;

use std::path::PathBuf;

use clap::Parser;

use config::RawConfig;
use error::{CliError, CliResult};

/// Command-line arguments.
#[derive(Debug, Parser)]
#[command(
    name = "dcf",
    version,
    about = "Analysis and simulation of saturated 802.11 DCF networks"
)]
pub struct Args {
    /// Configuration file of key=value entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// simulate, analyze-zero, analyze-delay, bianchi, meanfield, fairness,
    /// sweep-slot, sweep-minbe or compare.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub cycles: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<String>,
    /// Number of nodes; a list such as `2;3` or a range such as `2..10`.
    #[arg(long)]
    pub n: Option<String>,
    /// Propagation delay in microseconds; a list is allowed.
    #[arg(long = "delta-us")]
    pub delta_us: Option<String>,
    /// Backoff slot duration in microseconds.
    #[arg(long = "sigma-us")]
    pub sigma_us: Option<String>,
    /// Window of cycles for short-term collision probabilities.
    #[arg(long)]
    pub window: Option<String>,
    /// Frame lengths for the fairness index.
    #[arg(long = "L")]
    pub frame_lens: Option<String>,
    /// Bound on the mean success-run length.
    #[arg(long = "eu1-max")]
    pub eu1_max: Option<String>,
    /// Inclusive minBE range such as `0..10`.
    #[arg(long = "minbe-range")]
    pub minbe_range: Option<String>,
    /// Further key=value entries.
    pub entries: Vec<String>,
}

impl Args {
    /// Merges the configuration file, positional entries and flags.
    pub fn raw_config(&self) -> CliResult<RawConfig> {
        let mut raw = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Validation(format!("cannot read {}: {e}", path.display()))
                })?;
                RawConfig::parse(&text)?
            }
            None => RawConfig::default(),
        };
        for entry in &self.entries {
            raw.set_pair(entry)?;
        }
        let flags = [
            ("mode", &self.mode),
            ("seed", &self.seed),
            ("cycles", &self.cycles),
            ("out", &self.out),
            ("n", &self.n),
            ("delta_us", &self.delta_us),
            ("sigma_us", &self.sigma_us),
            ("window", &self.window),
            ("L", &self.frame_lens),
            ("eu1_max", &self.eu1_max),
            ("minbe_range", &self.minbe_range),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                raw.set(key, v)?;
            }
        }
        Ok(raw)
    }
}

/// Parses, runs and reports; returns the process exit status.
pub fn main_with(args: &Args) -> u8 {
    match args
        .raw_config()
        .and_then(|raw| raw.build())
        .and_then(|cfg| run::run(&cfg))
    {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
