#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Run;
use crate::config::Config;
use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "stochcell",
    version,
    about = "Cellular coverage simulation with building blockage"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic city of rectangular footprints.
    GenCity(Common),
    /// Estimate the empirical LOS probability histogram over a city.
    EstimateLos(Common),
    /// Fit a multi-ball blockage model by intensity matching.
    FitMultiball(Common),
    /// Fit a multi-lobe approximation of an antenna pattern.
    FitMultilobe(Common),
    /// Estimate the coverage probability of one scenario.
    Simulate(Common),
    /// Run every blockage x antenna combination listed under `suite.*`.
    Suite(Common),
}

#[derive(Args)]
struct Common {
    /// `key = value` configuration file; built-in defaults otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `sim.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `sim.iterations`.
    #[arg(long)]
    iterations: Option<u64>,
    /// Worker threads (0 = all cores); never changes results.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn resolve(&self) -> Result<Run, CliError> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::defaults(),
        };
        if let Some(s) = self.seed {
            cfg.set(&format!("sim.seed={s}"))?;
        }
        if let Some(n) = self.iterations {
            cfg.set(&format!("sim.iterations={n}"))?;
        }
        if let Some(w) = self.workers {
            cfg.set(&format!("sim.workers={w}"))?;
        }
        for s in &self.set {
            cfg.set(s)?;
        }
        Ok(Run {
            cfg,
            out: self.out.clone(),
        })
    }
}

type Action = fn(&Run) -> Result<(), CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, action): (&Common, Action) = match &cli.command {
        Command::GenCity(c) => (c, commands::gen_city),
        Command::EstimateLos(c) => (c, commands::estimate_los),
        Command::FitMultiball(c) => (c, commands::fit_multiball_cmd),
        Command::FitMultilobe(c) => (c, commands::fit_multilobe_cmd),
        Command::Simulate(c) => (c, commands::simulate),
        Command::Suite(c) => (c, commands::suite),
    };
    match common.resolve().and_then(|run| action(&run)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("stochcell: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
