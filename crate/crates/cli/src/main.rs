// `!(x > 0)` style checks are used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod benchmark;
mod diagnose;
mod error;
mod estimate;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::{io_err, CliError, Result};

#[derive(Parser)]
#[command(name = "pcqm", version, about = "Density estimation from censored point-centered quarter surveys")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply estimators to a distance-sample CSV.
    Estimate(estimate::EstimateArgs),
    /// Simulate a point pattern and one PCQM survey of it.
    Simulate(simulate::SimulateArgs),
    /// Run a replicated benchmark and write metric CSVs.
    Benchmark(benchmark::BenchmarkArgs),
    /// Tabulate asymptotic biases of the censoring adjustments.
    Diagnose(diagnose::DiagnoseArgs),
}

/// Survey overrides shared by several subcommands.
#[derive(Args, Debug, Default, Clone)]
pub struct DesignFlags {
    /// Neighbor order ℓ (comma-separated list where a sweep is allowed).
    #[arg(long, value_delimiter = ',')]
    pub ell: Vec<u32>,
    /// Sectors per focal point.
    #[arg(long, value_delimiter = ',')]
    pub q: Vec<u32>,
    /// Search radius C (comma-separated list where a sweep is allowed).
    #[arg(long, value_delimiter = ',')]
    pub radius: Vec<f64>,
}

pub fn single<T: Copy>(values: &[T], flag: &str) -> Result<Option<T>> {
    match values {
        [] => Ok(None),
        [v] => Ok(Some(*v)),
        _ => Err(CliError::Config(format!("--{flag} takes a single value here"))),
    }
}

/// Reads JSON; a run manifest yields its embedded `config`.
pub fn read_json_config<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let value = match value.get("config") {
        Some(inner) if value.get("tool").is_some() => inner.clone(),
        _ => value,
    };
    Ok(serde_json::from_value(value)?)
}

pub fn write_json_file<T: serde::Serialize>(path: &std::path::Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Estimate(args) => estimate::run(args),
        Command::Simulate(args) => simulate::run(args),
        Command::Benchmark(args) => benchmark::run(args),
        Command::Diagnose(args) => diagnose::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
