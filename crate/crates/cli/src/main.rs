use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use shs_core::cli_io::{parse_config, run_experiment, Experiment, Outcome, ReportRow};

#[derive(Parser, Debug)]
#[command(name = "shs-lab", version, about = "Solid-combustion simulation laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Finite-activation-energy system.
    SimulateEps(Common),
    /// Hysteresis limit problem.
    SimulateLimit(Common),
    /// Closed-form traveling wave.
    TravelingWave(Common),
    /// Pulsating wave in a periodic medium.
    PulsatingWave(Common),
    /// Roots of the dispersion relation.
    Dispersion(Common),
    /// L¹ distance to the limit solution as epsilon decreases.
    EpsConvergence(Common),
    /// Parameter sweep over one configuration key.
    Sweep(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for parallel stages.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, short)]
    verbose: bool,
}

impl Command {
    fn split(&self) -> (Experiment, &Common) {
        match self {
            Command::SimulateEps(c) => (Experiment::SimulateEps, c),
            Command::SimulateLimit(c) => (Experiment::SimulateLimit, c),
            Command::TravelingWave(c) => (Experiment::TravelingWave, c),
            Command::PulsatingWave(c) => (Experiment::PulsatingWave, c),
            Command::Dispersion(c) => (Experiment::Dispersion, c),
            Command::EpsConvergence(c) => (Experiment::EpsConvergence, c),
            Command::Sweep(c) => (Experiment::Sweep, c),
        }
    }
}

fn print_rows(rows: &[ReportRow]) {
    for row in rows {
        let status = match (&row.error, row.passed()) {
            (Some(_), _) => "ERROR",
            (None, true) => "PASS",
            (None, false) => "FAIL",
        };
        println!("[{status}] {}", row.id);
        for (name, value) in &row.metrics {
            match value {
                Some(v) => println!("    {name} = {v:e}"),
                None => println!("    {name} = none"),
            }
        }
        for (name, ok) in &row.verdicts {
            println!("    {name}: {}", if *ok { "pass" } else { "fail" });
        }
        for note in &row.notes {
            println!("    note: {note}");
        }
        if let Some(e) = &row.error {
            println!("    error: {e}");
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let (experiment, args) = cli.command.split();
    env_logger::Builder::new()
        .filter_level(if args.verbose {
            log::LevelFilter::Debug
        } else {
            log::LevelFilter::Warn
        })
        .parse_default_env()
        .init();
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let cfg = parse_config(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    if cfg.experiment != experiment {
        bail!(
            "{} declares experiment `{}` but the `{}` subcommand was given",
            args.config.display(),
            cfg.experiment.name(),
            experiment.name()
        );
    }
    log::info!("config hash {}", cfg.hash);
    let rows = run_experiment(&cfg, args.out.as_deref())?;
    print_rows(&rows);
    Ok(Outcome::of(&rows))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) => ExitCode::from(outcome.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
