//! `rslab`: run, validate and summarise scenario files.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 config parse error, 3 validation
//! error, 4 numerical failure, 5 invariant check failed (reports written).

mod config;
mod experiments;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ConfigError;

const EXIT_IO: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_INVALID: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;
const EXIT_INVARIANT: u8 = 5;

/// Environment variable fixing the worker thread count.
const THREADS_VAR: &str = "RSLAB_THREADS";

#[derive(Parser)]
#[command(name = "rslab", version, about = "Memory-kernel diffusion experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its report directory.
    Run {
        config: PathBuf,
        /// Output directory; defaults to `out/<scenario name>`.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a scenario without running it.
    Validate { config: PathBuf },
    /// Print the checks recorded in a report directory.
    Report { dir: PathBuf },
}

fn load(path: &Path) -> Result<config::Scenario, ExitCode> {
    config::load(path).map_err(|e| {
        eprintln!("{e}");
        ExitCode::from(match e {
            ConfigError::Io(_) => EXIT_IO,
            ConfigError::Parse(_) => EXIT_PARSE,
            ConfigError::Invalid(_) => EXIT_INVALID,
        })
    })
}

fn init_threads() -> Result<(), ExitCode> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = match raw.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => {
            eprintln!("{THREADS_VAR} must be a positive integer, got {raw:?}");
            return Err(ExitCode::from(EXIT_INVALID));
        }
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| {
            eprintln!("cannot start {n} worker threads: {e}");
            ExitCode::from(EXIT_IO)
        })
}

fn run(config: &Path, out: Option<PathBuf>) -> Result<ExitCode, ExitCode> {
    let scenario = load(config)?;
    init_threads()?;
    let dir = out.unwrap_or_else(|| Path::new("out").join(&scenario.name));
    let outcome = experiments::run(&scenario).map_err(|e| {
        eprintln!("{}: numerical failure: {e}", scenario.name);
        ExitCode::from(EXIT_NUMERICAL)
    })?;
    let rep = report::Report::new(&scenario, outcome.checks, outcome.results, &outcome.tables);
    report::emit(&dir, &rep, &outcome.tables, &outcome.fields, scenario.output.fields).map_err(|e| {
        eprintln!("{e}");
        ExitCode::from(EXIT_IO)
    })?;
    print!("{}", report::render(&rep));
    println!("wrote {}", dir.display());
    Ok(if rep.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_INVARIANT)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out } => run(&config, out),
        Command::Validate { config } => load(&config).map(|s| {
            println!("{}: valid {} scenario", s.name, s.experiment.tag());
            ExitCode::SUCCESS
        }),
        Command::Report { dir } => match report::load(&dir) {
            Ok(rep) => {
                print!("{}", report::render(&rep));
                Ok(if rep.passed {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(EXIT_INVARIANT)
                })
            }
            Err(e) => {
                eprintln!("{e}");
                Err(ExitCode::from(EXIT_IO))
            }
        },
    };
    result.unwrap_or_else(|code| code)
}
