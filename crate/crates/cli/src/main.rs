use std::path::PathBuf;
use std::process::ExitCode;
use std::time::SystemTime;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod output;

use config::{Overrides, RunConfig};
use error::CliError;
use output::OutDir;

#[derive(Parser)]
#[command(name = "cohgate", version, about = "Coherence-gated routing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// key = value or JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed; overrides `base_seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Trajectory count; overrides `n_traj` from the config.
    #[arg(long, global = true)]
    n_traj: Option<usize>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Conditional vs unconditional coherence, terminal-S histogram.
    Demo,
    /// Bias, mismatch and repair metrics of the benchmarked filters.
    Estimators,
    /// Min-entropy certification across thresholds.
    Qrng,
    /// Threshold sweep of heralding and mismatch.
    GateSweep,
    /// Overcertification statistics and tail bounds.
    Overcert,
    /// Assumed-efficiency sweep.
    Rstar,
    /// Composable operating points and entanglement tables.
    CertifyTables,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Demo => "demo",
            Command::Estimators => "estimators",
            Command::Qrng => "qrng",
            Command::GateSweep => "gate-sweep",
            Command::Overcert => "overcert",
            Command::Rstar => "rstar",
            Command::CertifyTables => "certify-tables",
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let started = SystemTime::now();
    let overrides = Overrides { seed: cli.seed, n_traj: cli.n_traj };
    let cfg = RunConfig::load(cli.config.as_deref(), overrides)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let mut out = OutDir::create(&cli.out)?;
    match cli.command {
        Command::Demo => commands::demo(&cfg, &mut out)?,
        Command::Estimators => commands::estimators(&cfg, &mut out)?,
        Command::Qrng => commands::qrng(&cfg, &mut out)?,
        Command::GateSweep => commands::gate_sweep(&cfg, &mut out)?,
        Command::Overcert => commands::overcert(&cfg, &mut out)?,
        Command::Rstar => commands::rstar(&cfg, &mut out)?,
        Command::CertifyTables => commands::certify_tables(&cfg, &mut out)?,
    }
    let config = serde_json::to_value(&cfg).expect("config serializes");
    let files = out.finish(cli.command.name(), cfg.sim.base_seed, cfg.hash(), config, started)?;
    for f in files {
        println!("{}", cli.out.join(&f.name).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cohgate {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
