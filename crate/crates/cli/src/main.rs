//! Batch command-line frontend: wires run configurations to the library and
//! emits machine-readable JSON/CSV result files.
//!
//! Exit codes: 0 success, 1 unsatisfied reports under --strict, 2 config
//! errors, 3 computation errors.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Compute(ruelle_core::Error),
    Io(String),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Both,
}

#[derive(Parser)]
#[command(
    name = "ruelle",
    about = "Transfer-operator spectra and dynamical zeta functions on topological Markov shifts",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Path to the run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Output formats to emit.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Exit nonzero when any verification report is unsatisfied.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Topological entropy and Perron data of the transition matrix.
    Entropy,
    /// Admissible word counts (and the word list when small).
    Words,
    /// Periodic-orbit counts and orbit sums Z_q.
    Orbits,
    /// Eigenvalues of the transfer matrix of the (projected) potential.
    Spectrum,
    /// Topological pressure of a real potential with its error bracket.
    Pressure,
    /// Zeta coefficients by all three routes, plus product evaluations.
    Zeta,
    /// Trace-formula defect tables over the m-schedule.
    TraceCheck,
    /// The sampled inequality suite, one JSON line per bound report.
    Verify,
    /// Cohomology-obstruction witness and basis defects.
    Cohomology,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Compute(err)) => {
            eprintln!("computation error: {err}");
            ExitCode::from(3)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("output error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode, CliError> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let config = RunConfig::load(config_path)?;

    let (outputs, strict_ok) = match cli.command {
        Command::Entropy => (commands::cmd_entropy(&config)?, true),
        Command::Words => (commands::cmd_words(&config)?, true),
        Command::Orbits => (commands::cmd_orbits(&config)?, true),
        Command::Spectrum => (commands::cmd_spectrum(&config)?, true),
        Command::Pressure => (commands::cmd_pressure(&config)?, true),
        Command::Zeta => (commands::cmd_zeta(&config)?, true),
        Command::TraceCheck => (commands::cmd_trace_check(&config)?, true),
        Command::Verify => {
            let (outputs, ok) = commands::cmd_verify(&config)?;
            (outputs, ok)
        }
        Command::Cohomology => (commands::cmd_cohomology(&config)?, true),
    };

    let written = outputs.write(&cli.out, cli.format)?;
    for path in &written {
        println!("wrote {}", path.display());
    }
    if cli.strict && !strict_ok {
        eprintln!("strict mode: unsatisfied reports present");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}
