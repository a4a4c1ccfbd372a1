//! Command-line experiment runner. Each subcommand produces one CSV file;
//! a TOML config file supplies the detailed parameters and a handful of
//! flags override the common ones. Exit codes: 0 on success, 2 for
//! configuration mistakes, 3 for numerical failures.

mod config;
mod experiments;
mod output;

use clap::{Parser, Subcommand};
use config::{Config, Experiment, Overrides};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "thermcoh",
    version,
    about = "Thermal coherence experiments: generation, protection, scaling, and collisional harvesting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration file (defaults are used when omitted).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output CSV path (overrides the config).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Base RNG seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; 0 means one per CPU (overrides the config).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Mean thermal photon number for the selected experiment.
    #[arg(long, global = true)]
    nbar: Option<f64>,

    /// Exchange strength f0 in units of gamma0 for the selected experiment.
    #[arg(long, global = true)]
    f0: Option<f64>,

    /// Largest cluster size (scaling experiment only).
    #[arg(long = "n-atoms", global = true)]
    n_atoms: Option<usize>,

    /// Expected number of collisions per run (harvest experiment only).
    #[arg(long, global = true)]
    collisions: Option<usize>,

    /// Collision strength g*tau (harvest experiment only; rescales tau).
    #[arg(long, global = true)]
    gtau: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Coherence growth of a collective pair versus the analytic curve.
    PairCoherence,
    /// Coherence protection and decay for different initial pair states.
    DipoleEffect,
    /// Long-time coherence versus cluster size with a cubic fit summary.
    Scaling,
    /// Collisional harvesting: rates, effective temperatures, Monte Carlo.
    Harvest,
    /// Exchange and decay coupling coefficients versus separation.
    Couplings,
}

impl Command {
    fn experiment(&self) -> Experiment {
        match self {
            Command::PairCoherence => Experiment::PairCoherence,
            Command::DipoleEffect => Experiment::DipoleEffect,
            Command::Scaling => Experiment::Scaling,
            Command::Harvest => Experiment::Harvest,
            Command::Couplings => Experiment::Couplings,
        }
    }
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = Cli::parse();
    let experiment = cli.command.experiment();

    let overrides = Overrides {
        out: cli.out,
        seed: cli.seed,
        workers: cli.workers,
        nbar: cli.nbar,
        f0: cli.f0,
        n_atoms: cli.n_atoms,
        collisions: cli.collisions,
        gtau: cli.gtau,
    };

    let cfg = match Config::load(cli.config.as_deref()).and_then(|mut cfg| {
        cfg.apply_overrides(experiment, &overrides)?;
        cfg.validate(experiment)?;
        Ok(cfg)
    }) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("config error: {err}");
            return 2;
        }
    };

    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
    {
        Ok(pool) => pool,
        Err(err) => {
            eprintln!("config error: cannot build a {}-thread worker pool: {err}", cfg.workers);
            return 2;
        }
    };

    let csv = match pool.install(|| experiments::run(experiment, &cfg)) {
        Ok(csv) => csv,
        Err(err) => {
            eprintln!("{}: {err}", experiment.name());
            return err.exit_code();
        }
    };

    if let Err(err) = std::fs::write(&cfg.out, &csv) {
        eprintln!("config error: cannot write '{}': {err}", cfg.out);
        return 2;
    }
    println!("{}: wrote {}", experiment.name(), cfg.out);
    0
}
