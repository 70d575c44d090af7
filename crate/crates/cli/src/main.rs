//! `regvote`: bound tables, the flag experiment, shift sweeps, breakdown
//! searches and regional PCA matching from one binary.
//!
//! Exit status is 0 when every check matches, 1 on a mismatch and 2 on a
//! configuration or input error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::commands::Run;
use crate::config::{ConfigError, RawConfig};
use crate::output::Format;

#[derive(Parser)]
#[command(name = "regvote", version, about = "Regional versus global voting under noise")]
struct Cli {
    /// Config file: `key = value` lines, a JSON object, or any earlier output.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the master seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory; stdout when absent.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Stability-margin tables, checked against the published values.
    Bounds,
    /// Seeded search for a flag that regional voting protects.
    Flag,
    /// Contamination of every shifted partition by a block layout.
    Sweep,
    /// Minimum overturning noise for each decision scheme.
    Breakdown,
    /// Recognition rates of regional PCA matching.
    Eigen,
}

fn resolved<C: Default + Serialize + DeserializeOwned>(raw: &RawConfig, seed: Option<u64>) -> Result<C, ConfigError> {
    config::resolve(raw, seed)
}

fn run(cli: &Cli) -> Result<anyhow::Result<Run>, ConfigError> {
    let raw = match &cli.config {
        Some(path) => config::read_file(path)?,
        None => RawConfig::default(),
    };
    Ok(match cli.command {
        Command::Bounds => commands::bounds(&resolved(&raw, cli.seed)?),
        Command::Flag => commands::flag(&resolved(&raw, cli.seed)?),
        Command::Sweep => commands::sweep(&resolved(&raw, cli.seed)?),
        Command::Breakdown => commands::breakdown(&resolved(&raw, cli.seed)?),
        Command::Eigen => commands::eigen(&resolved(&raw, cli.seed)?),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let done = match outcome {
        Ok(done) => done,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match done.report.emit(cli.format, cli.out.as_deref()) {
        Ok(files) => {
            if let Some(dir) = &cli.out {
                for f in files {
                    eprintln!("wrote {}", dir.join(f).display());
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    }
    if done.matched {
        ExitCode::SUCCESS
    } else {
        eprintln!("check failed; see output");
        ExitCode::from(1)
    }
}
