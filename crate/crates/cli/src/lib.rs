//! Command-line driver: parses an experiment configuration, runs it and
//! writes a CSV, a metadata sidecar and optionally a gnuplot script.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::{Experiment, ExperimentConfig};
use output::OutputPaths;

#[derive(Debug, Parser)]
#[command(name = "radpair", version, about = "Radical-pair spin dynamics experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Configuration file (key=value lines, or a metadata sidecar from an earlier run).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output CSV path; the sidecar and plot script are written next to it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Random seed, overrides `seed` from the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Triplet yield against field strength.
    YieldVsB,
    /// Triplet yield against field heading.
    YieldVsAngle,
    /// Magnetic and angular precision against exchange coupling.
    PrecisionVsJ,
    /// Surviving population over time in both rate regimes.
    PopulationDynamics,
    /// Tracked superoperator eigenvalues against measurement rate.
    SpectrumScaling,
    /// Monte Carlo yields against the deterministic ones.
    McCheck,
}

impl Command {
    pub fn experiment(self) -> Experiment {
        match self {
            Command::YieldVsB => Experiment::YieldVsB,
            Command::YieldVsAngle => Experiment::YieldVsAngle,
            Command::PrecisionVsJ => Experiment::PrecisionVsJ,
            Command::PopulationDynamics => Experiment::PopulationDynamics,
            Command::SpectrumScaling => Experiment::SpectrumScaling,
            Command::McCheck => Experiment::McCheck,
        }
    }
}

/// Runs the command and returns the paths written.
pub fn run(cli: &Cli) -> Result<OutputPaths> {
    let experiment = cli.command.experiment();
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?,
        None => String::new(),
    };
    let cfg = ExperimentConfig::parse(experiment, &text, cli.seed).context("invalid configuration")?;
    let csv = cli.out.clone().unwrap_or_else(|| PathBuf::from(format!("{experiment}.csv")));
    let paths = OutputPaths::for_csv(&csv);
    let table = experiments::run(&cfg, cli.jobs)?;
    output::write_all(&paths, &cfg, &table)?;
    Ok(paths)
}
