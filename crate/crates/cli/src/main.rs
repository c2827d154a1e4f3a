#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Context;
use crate::config::{RawConfig, RunConfig};
use crate::error::CliError;

/// Permanent-magnet stripe mirror simulator.
#[derive(Debug, Parser)]
#[command(name = "stripe-mirror", version, about)]
struct Cli {
    /// Configuration file (flat `key = value` with units).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the configured random seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads for ensemble runs.
    #[arg(long, global = true, value_name = "N", env = "STRIPE_MIRROR_THREADS",
          value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
    /// Output directory for CSV files and reports.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print harmonic coefficients, reflection threshold and turning point.
    Coeffs,
    /// Write the field on a grid to field_map.csv.
    FieldMap,
    /// Drop a single atom and write trajectory.csv plus a bounce report.
    Drop,
    /// Run the Monte Carlo cloud and write ensemble.csv.
    Ensemble,
    /// Fit the expansion of a cloud series and test for specular reflection.
    Analyze {
        /// Ensemble CSV to analyse.
        series: PathBuf,
    },
    /// Repeat the scalar outputs over values of one configuration key.
    Sweep {
        /// Configuration key to vary, e.g. `a` or `drop`.
        #[arg(long)]
        param: String,
        /// Comma-separated values with optional units, e.g. "1 um,2 um".
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
    },
    /// Run the built-in oracle checks.
    Validate,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut raw = match &cli.config {
        Some(path) => RawConfig::load(path)?,
        None => RawConfig::default(),
    };
    if let Some(seed) = cli.seed {
        raw.set("seed", &seed.to_string())?;
    }
    let ctx = Context {
        out_dir: cli.out.clone(),
        threads: cli.threads.map(|n| n as usize),
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match &cli.command {
        Command::Validate => commands::validate(&mut out),
        Command::Sweep { param, values } => {
            RunConfig::from_raw(&raw)?;
            let values: Vec<String> = values.iter().map(|v| v.trim().to_string()).collect();
            commands::sweep(&raw, &ctx, param, &values, &mut out)
        }
        command => {
            let cfg = RunConfig::from_raw(&raw)?;
            match command {
                Command::Coeffs => commands::coeffs(&cfg, &ctx, &mut out),
                Command::FieldMap => commands::field_map(&cfg, &ctx, &mut out),
                Command::Drop => commands::drop(&cfg, &ctx, &mut out),
                Command::Ensemble => commands::ensemble(&cfg, &ctx, &mut out),
                Command::Analyze { series } => commands::analyze(&cfg, &ctx, series, &mut out),
                Command::Validate | Command::Sweep { .. } => unreachable!(),
            }
        }
    }?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("stripe-mirror: {e}");
            e.exit_code()
        }
    }
}
