use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use discoflux::harness::commands;
use discoflux::harness::config::KEYS_HELP;
use discoflux::harness::{ExperimentConfig, HarnessError};

#[derive(Parser)]
#[command(name = "discoflux", version, about = "Discontinuous-flux conservation laws and zero range processes")]
#[command(after_help = KEYS_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Shared {
    /// Flat key=value config file
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed, overrides the config
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory, overrides the config
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, value_name = "K")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Mollified finite-volume solve, snapshot CSVs
    Solve(Shared),
    /// Steady-state profiles for each configured flux level
    Steady(Shared),
    /// One zero range trajectory, occupancy and block CSVs
    Zrp(Shared),
    /// Coupled ensemble: discrepancy trace and microscopic entropy
    Couple(Shared),
    /// Adapted entropy audit of solver output on three grids
    Audit(Shared),
    /// Hydrodynamic-limit ladder and/or epsilon study
    Hydro(Shared),
}

fn load(shared: &Shared) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = match &shared.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = shared.seed {
        cfg.seed = s;
    }
    if let Some(o) = &shared.out {
        cfg.out = Some(o.clone());
    }
    Ok(cfg)
}

fn run(name: &str, shared: &Shared) -> Result<bool, HarnessError> {
    if let Some(k) = shared.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build_global()
            .map_err(|e| HarnessError::Invalid(e.to_string()))?;
    }
    let cfg = load(shared)?;
    let outcome = commands::run(name, &cfg)?;
    for line in &outcome.lines {
        println!("{line}");
    }
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, shared) = match &cli.command {
        Command::Solve(s) => ("solve", s),
        Command::Steady(s) => ("steady", s),
        Command::Zrp(s) => ("zrp", s),
        Command::Couple(s) => ("couple", s),
        Command::Audit(s) => ("audit", s),
        Command::Hydro(s) => ("hydro", s),
    };
    match run(name, shared) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
