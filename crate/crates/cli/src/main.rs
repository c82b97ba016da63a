//! `magt`: solve games and run learning dynamics from JSON configs.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 bad input or configuration,
//! 3 unsupported instance.

mod config;
mod failure;
mod output;
mod report;
mod simulate;
mod solve;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use magt_core::equilibria::{DominanceMode, DEFAULT_ACTION_CAP, DEFAULT_ESS_RESOLUTION};

use crate::failure::{CliResult, Failure};
use crate::output::OutputDir;
use crate::simulate::Overrides;

#[derive(Parser, Debug)]
#[command(
    name = "magt",
    version,
    about = "Normal-form games and multiagent learning dynamics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eliminate dominated actions, enumerate Nash equilibria, check ESS.
    Solve(SolveArgs),
    /// Run one of the learning dynamics from a JSON config.
    Simulate {
        #[command(subcommand)]
        dynamics: Dynamics,
    },
    /// Aggregate trace files into a summary table and gnuplot data.
    Report(ReportArgs),
}

#[derive(Subcommand, Debug)]
enum Dynamics {
    /// Fictitious play.
    Fp(SimArgs),
    /// Discrete replicator dynamics, with an optional stability probe.
    Replicator(SimArgs),
    /// Expected-error prediction against Monte Carlo simulation.
    Clri(SimArgs),
    /// Repeated play among 0/1/2-level agents.
    Society(SimArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, Default)]
enum Format {
    #[default]
    Csv,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Directory for result files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Result file format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Game document (JSON).
    game: PathBuf,
    /// Treat the game as symmetric and check ESS for symmetric equilibria.
    #[arg(long)]
    symmetric: bool,
    /// Dominance used for elimination.
    #[arg(long, value_enum, default_value_t = Mode::Strict)]
    mode: Mode,
    /// Largest action count accepted by Nash enumeration.
    #[arg(long, default_value_t = DEFAULT_ACTION_CAP)]
    cap: usize,
    /// Regret below which a profile counts as an equilibrium.
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    /// Grid divisions per coordinate for ESS invaders.
    #[arg(long, default_value_t = DEFAULT_ESS_RESOLUTION)]
    resolution: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Mode {
    Strict,
    Weak,
}

#[derive(Args, Debug)]
struct SimArgs {
    /// Experiment config (JSON).
    config: PathBuf,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Step budget; overrides the config.
    #[arg(long)]
    budget: Option<usize>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Trace CSV files sharing one schema.
    traces: Vec<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

/// Caps the global rayon pool when `MAGT_THREADS` is set.
fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("MAGT_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            Failure::input(format!("MAGT_THREADS={value:?} is not a positive integer"))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::runtime(format!("cannot size the thread pool: {e}")))
}

fn open_output(args: &OutputArgs) -> CliResult<OutputDir> {
    match args.format {
        Format::Csv => OutputDir::create(&args.out),
    }
}

type Runner = fn(&Path, &Overrides, &mut OutputDir) -> CliResult<()>;

fn simulate(dynamics: &Dynamics) -> CliResult<OutputDir> {
    let (args, run): (&SimArgs, Runner) = match dynamics {
        Dynamics::Fp(a) => (a, simulate::fp),
        Dynamics::Replicator(a) => (a, simulate::replicator),
        Dynamics::Clri(a) => (a, simulate::clri),
        Dynamics::Society(a) => (a, simulate::society),
    };
    let overrides = Overrides {
        seed: args.seed,
        budget: args.budget,
    };
    let mut out = open_output(&args.output)?;
    run(&args.config, &overrides, &mut out)?;
    Ok(out)
}

fn dispatch(cli: &Cli) -> CliResult<OutputDir> {
    configure_threads()?;
    match &cli.command {
        Command::Solve(args) => {
            let loaded = config::load_game_file(&args.game)?;
            let options = solve::SolveOptions {
                symmetric: args.symmetric,
                mode: match args.mode {
                    Mode::Strict => DominanceMode::Strict,
                    Mode::Weak => DominanceMode::Weak,
                },
                cap: args.cap,
                tolerance: args.tolerance,
                resolution: args.resolution,
            };
            let mut out = open_output(&args.output)?;
            solve::run(&loaded, &options, &mut out)?;
            Ok(out)
        }
        Command::Simulate { dynamics } => simulate(dynamics),
        Command::Report(args) => {
            if args.traces.is_empty() {
                return Err(Failure::input("no trace files given"));
            }
            let mut out = open_output(&args.output)?;
            report::run(&args.traces, &mut out, &args.output.out)?;
            Ok(out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(out) => {
            for path in out.written() {
                eprintln!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
