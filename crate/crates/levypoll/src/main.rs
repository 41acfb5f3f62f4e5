use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use levypoll::{CliError, Overrides};

#[derive(Parser)]
#[command(name = "levypoll", version, about = "Stability, workload transforms and simulation of cyclic polling systems with subordinator input")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stability report and stationary first moments (JSON).
    Analyze(Common),
    /// Analytic embedded and arbitrary-epoch transforms on the evaluation grid (CSV).
    Transform(Common),
    /// Monte Carlo estimates on the evaluation grid (CSV).
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also write the path segments of the first cycles of replication 0.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        trace_cycles: usize,
    },
    /// Compare analytic and simulated values; exits 1 if any check fails.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "LEVYPOLL_SEED")]
    seed: Option<u64>,
    #[arg(long, env = "LEVYPOLL_REPLICATIONS")]
    replications: Option<usize>,
}

fn emit(out: &Option<PathBuf>, body: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, body)?,
        None => print!("{body}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let common = match &cli.command {
        Command::Analyze(c) | Command::Transform(c) | Command::Validate(c) => c,
        Command::Simulate { common, .. } => common,
    };
    let text = std::fs::read_to_string(&common.config)?;
    let (doc, resolved) =
        levypoll::load(&text, Overrides { seed: common.seed, replications: common.replications })?;
    match &cli.command {
        Command::Analyze(c) => emit(&c.out, &levypoll::analyze(&doc, &resolved)?)?,
        Command::Transform(c) => emit(&c.out, &levypoll::transform(&resolved)?)?,
        Command::Simulate { common, trace, trace_cycles } => {
            emit(&common.out, &levypoll::simulate(&resolved)?)?;
            if let Some(path) = trace {
                std::fs::write(path, levypoll::trace(&resolved, *trace_cycles)?)?;
            }
        }
        Command::Validate(c) => {
            let outcome = levypoll::validate(&resolved)?;
            emit(&c.out, &outcome.csv)?;
            for f in &outcome.failures {
                eprintln!("FAILED {f}");
            }
            return Ok(outcome.passed);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
