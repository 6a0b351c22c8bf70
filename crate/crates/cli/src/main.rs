mod config;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::config::ModeSpec;
use crate::run::Failure;

/// Moment-expansion ground-state solver driven by a TOML run configuration.
#[derive(Parser)]
#[command(name = "iqae", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the configured mode and write results.
    Run(Args),
    /// Execute a bench-mode configuration.
    Bench(Args),
    /// Check a configuration without computing anything.
    Validate(Args),
}

#[derive(clap::Args)]
struct Args {
    config: PathBuf,
    /// `key=value` replacing a configuration entry, e.g. `solver.k_max=3`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical failure: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    let (args, bench_only, dry) = match command {
        Command::Run(a) => (a, false, false),
        Command::Bench(a) => (a, true, false),
        Command::Validate(a) => (a, false, true),
    };
    let start = Instant::now();
    let config = config::load(&args.config, &args.overrides)?;
    if bench_only && !matches!(config.mode, ModeSpec::Bench { .. }) {
        return Err(Failure::Config(anyhow::anyhow!(
            "mode.kind must be bench for the bench command, got {}",
            config.mode.name()
        )));
    }
    let prepared = config.validate()?;
    if dry {
        println!("{}: valid {} configuration", args.config.display(), config.mode.name());
        return Ok(());
    }
    let report = run::execute(&config, &prepared)?;
    let wall = config.output.timings.then(|| start.elapsed().as_secs_f64() * 1e3);
    output::emit(&config, &report, wall)?;
    println!("{} -> {}", report.headline, config.output.path.display());
    Ok(())
}
