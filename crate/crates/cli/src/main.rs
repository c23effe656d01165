//! `qks`: validate the DARWIN table, preprocess it and run the classical
//! and quantum kernel experiments.

mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Kind, RunOptions};

#[derive(Debug, Parser)]
#[command(name = "qks", version, about = "Quantum kernel screening experiments on handwriting data")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a DARWIN CSV cell by cell.
    Validate { path: PathBuf },
    /// Write standardized principal components and the fitted transform.
    Preprocess {
        #[arg(long, default_value = "data/DARWIN.csv")]
        data: PathBuf,
        #[arg(long, default_value_t = 24)]
        components: usize,
        #[arg(long, default_value = "results/preprocess")]
        out: PathBuf,
    },
    /// Run an experiment.
    Run {
        #[arg(value_enum)]
        kind: Option<Kind>,
        /// Flat JSON file with the same keys as the flags.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        options: RunOptions,
    },
    /// Shorthand for `run spectrum`.
    Spectrum {
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        options: RunOptions,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Io(String),
    Core(qks_core::Error),
}

impl From<qks_core::Error> for CliError {
    fn from(e: qks_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(qks_core::Error::InvalidArgument(_)) => 1,
            CliError::Data(_) => 2,
            CliError::Core(e) if e.is_data_error() => 2,
            CliError::Io(_) | CliError::Core(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Io(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

fn run_with(kind: Option<Kind>, config: Option<PathBuf>, options: RunOptions) -> Result<(), CliError> {
    let base = match &config {
        Some(path) => RunOptions::from_file(path)?,
        None => RunOptions::default(),
    };
    let flags = RunOptions { kind, ..options };
    let cfg = flags.over(base).resolve()?;
    commands::run(&cfg)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size the worker pool: {e}")))?;
    }
    match cli.command {
        Command::Validate { path } => commands::validate(&path),
        Command::Preprocess { data, components, out } => commands::preprocess_cmd(&data, components, &out),
        Command::Run { kind, config, options } => run_with(kind, config, options),
        Command::Spectrum { config, options } => run_with(Some(Kind::Spectrum), config, options),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
