//! Command-line driver for the docking simulator.
//!
//! `run` simulates one scenario and writes the trajectory log and metrics;
//! `batch` sweeps consecutive seeds and reports the docking rate. Exit code
//! 0 means the run docked (or the batch met its success floor), 1 means it
//! did not, 2 means the invocation itself failed.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use hoverdock_core::scenario::{load_scenario, ScenarioConfig};
use hoverdock_core::sim::{run, run_batch, write_outputs, Outcome};

#[derive(Parser)]
#[command(name = "hoverdock", version, about = "Underwater docking procedure simulator")]
struct Cli {
    /// Print every built-in default as scenario text and exit.
    #[arg(long)]
    dump_defaults: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one run and write trajectory.csv and metrics.txt.
    Run {
        /// Scenario file to load.
        #[arg(long)]
        scenario: PathBuf,
        /// Random seed; defaults to the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for the log and metrics.
        #[arg(long)]
        out: PathBuf,
        /// Override the scenario's time limit in seconds.
        #[arg(long)]
        max_duration: Option<f64>,
    },
    /// Simulate consecutive seeds and write summary.txt.
    Batch {
        /// Scenario file to load.
        #[arg(long)]
        scenario: PathBuf,
        /// Number of seeds to run.
        #[arg(long)]
        seeds: u64,
        /// First seed of the sweep.
        #[arg(long, default_value_t = 1)]
        seed_start: u64,
        /// Output directory for the summary.
        #[arg(long)]
        out: PathBuf,
        /// Override the scenario's time limit in seconds.
        #[arg(long)]
        max_duration: Option<f64>,
        /// Docking rate required for a zero exit code; defaults to the
        /// scenario's batch.success_floor.
        #[arg(long)]
        floor: Option<f64>,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load(scenario: &Path, max_duration: Option<f64>) -> anyhow::Result<ScenarioConfig> {
    let mut cfg = load_scenario(scenario)
        .with_context(|| format!("loading scenario {}", scenario.display()))?;
    if let Some(d) = max_duration {
        cfg.max_duration_s = d;
        cfg.validate()?;
    }
    Ok(cfg)
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    if cli.dump_defaults {
        print!("{}", ScenarioConfig::default().dump());
        return Ok(ExitCode::SUCCESS);
    }
    match cli.command {
        None => bail!("nothing to do: use run, batch or --dump-defaults"),
        Some(Command::Run { scenario, seed, out, max_duration }) => {
            let cfg = load(&scenario, max_duration)?;
            let seed = seed.unwrap_or(cfg.seed);
            let output = run(&cfg, seed)?;
            write_outputs(&out, &output)?;
            print!("{}", output.metrics.to_text());
            Ok(if output.metrics.outcome == Outcome::Docked {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Some(Command::Batch { scenario, seeds, seed_start, out, max_duration, floor }) => {
            if seeds == 0 {
                bail!("batch needs at least one seed");
            }
            let cfg = load(&scenario, max_duration)?;
            let floor = floor.unwrap_or(cfg.batch_success_floor);
            let batch = run_batch(&cfg, seed_start, seeds)?;
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join("summary.txt"), batch.to_text())?;
            print!("{}", batch.to_text());
            Ok(if batch.success_rate() >= floor {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}
