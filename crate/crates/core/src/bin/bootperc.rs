use std::path::PathBuf;
use std::process::ExitCode;

use bootperc::experiment::{self, ExperimentConfig, ExperimentKind};
use bootperc::{Error, Result};
use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Generate,
    Percolate,
    Lln,
    Scan,
    Trajectory,
    Sandwich,
    Kernel,
    Theory,
}

impl From<Command> for ExperimentKind {
    fn from(c: Command) -> Self {
        match c {
            Command::Generate => ExperimentKind::Generate,
            Command::Percolate => ExperimentKind::Percolate,
            Command::Lln => ExperimentKind::Lln,
            Command::Scan => ExperimentKind::Scan,
            Command::Trajectory => ExperimentKind::Trajectory,
            Command::Sandwich => ExperimentKind::Sandwich,
            Command::Kernel => ExperimentKind::Kernel,
            Command::Theory => ExperimentKind::Theory,
        }
    }
}

/// Bootstrap percolation experiments on Chung-Lu random graphs.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    command: Command,
    /// JSON configuration; defaults are used for missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.experiment = cli.command.into();
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(r) = cli.replicates {
        cfg.replicates = r;
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load(cli)?;
    if cli.print_config {
        println!("{}", cfg.to_json()?);
        return Ok(());
    }
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    log::info!("running {:?} with seed {}", cfg.experiment, cfg.seed);
    match cfg.experiment {
        ExperimentKind::Generate => print(&experiment::cmd_generate(&cfg)?),
        ExperimentKind::Percolate => print(&experiment::cmd_percolate(&cfg)?),
        ExperimentKind::Lln => print(&experiment::cmd_lln(&cfg)?),
        ExperimentKind::Scan => print(&experiment::cmd_scan(&cfg)?),
        ExperimentKind::Trajectory => print(&experiment::cmd_trajectory(&cfg)?),
        ExperimentKind::Sandwich => print(&experiment::cmd_sandwich(&cfg)?),
        ExperimentKind::Kernel => print(&experiment::cmd_kernel(&cfg)?),
        ExperimentKind::Theory => print(&experiment::cmd_theory(&cfg)?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BOOTPERC_LOG", "error")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
