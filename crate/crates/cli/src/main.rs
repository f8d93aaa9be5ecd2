mod args;
mod commands;
mod error;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::LevelFilter;

use commands::{plan, simulate, solve, sweep, validate, window};
use error::{CliError, CliResult, Outcome};

/// Landau–Zener–Stückelberg–Majorana passages: closed-form predictions,
/// direct integration, phase control and pulse planning.
#[derive(Parser, Debug)]
#[command(name = "lzsm", version, about)]
struct Cli {
    /// Increase log detail (-v info, -vv debug, -vvv trace).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Propagate a state through one sweep or a pulse program.
    Simulate(simulate::SimulateArgs),
    /// Initial phase for a control objective.
    SolvePhase(solve::SolveArgs),
    /// Interference window and critical adiabaticities.
    Window(window::WindowArgs),
    /// Final occupation over a parameter grid (CSV).
    Sweep(sweep::SweepArgs),
    /// Two-passage program steering one occupation to another.
    Plan(plan::PlanArgs),
    /// Compare the closed form against integration over a grid.
    Validate(validate::ValidateArgs),
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        2 => LevelFilter::Debug,
        _ => LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
}

fn init_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("LZSM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::usage(format!("LZSM_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Runtime(e.into()))
}

fn run(cli: &Cli) -> CliResult<Outcome> {
    init_threads()?;
    match &cli.command {
        Command::Simulate(a) => simulate::run(a),
        Command::SolvePhase(a) => solve::run(a),
        Command::Window(a) => window::run(a),
        Command::Sweep(a) => sweep::run(a),
        Command::Plan(a) => plan::run(a),
        Command::Validate(a) => validate::run(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    match run(&cli) {
        Ok(outcome) => ExitCode::from(outcome.exit_code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
