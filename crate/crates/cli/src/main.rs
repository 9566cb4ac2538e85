mod args;
mod commands;
mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

use args::{Cli, OutputFormat};

pub const THREADS_ENV: &str = "GBM_HITFUN_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] hitfun::Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    fn code(&self) -> &'static str {
        use hitfun::Error as E;
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Core(e) => match e {
                E::Domain(_) => "domain",
                E::Overflow(_) => "overflow",
                E::BranchCut { .. } => "branch_cut",
                E::OutOfRange { .. } => "out_of_range",
                E::ZeroCount { .. } => "zero_count",
                E::InconsistentZeros { .. } => "inconsistent_zeros",
                E::NonConvergence { .. } => "nonconvergence",
                E::Envelope { .. } => "envelope",
                E::Integrability { .. } => "integrability",
                E::Branch(_) => "branch",
            },
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

fn workers(cli: &Cli) -> Result<usize, CliError> {
    let n = match std::env::var(THREADS_ENV) {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .map_err(|e| CliError::Usage(format!("{THREADS_ENV}='{s}': {e}")))?,
        Err(_) => cli.workers,
    };
    if n == 0 {
        return Err(CliError::Usage("the worker count must be at least 1".into()));
    }
    Ok(n)
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let workers = workers(cli)?;
    // grid evaluation shares the global pool; the Monte-Carlo engine builds its own
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let report = commands::run(cli, workers)?;
    let mut sink: Box<dyn Write> = match &cli.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match cli.format() {
        OutputFormat::Csv => report.write_csv(&mut sink)?,
        OutputFormat::Json => report.write_json(&mut sink)?,
    }
    sink.flush()?;
    Ok(())
}

fn fail(code: &str, message: &str, exit: u8) -> ExitCode {
    let record = json!({ "error": { "code": code, "message": message, "exit": exit } });
    eprintln!("{record}");
    ExitCode::from(exit)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim_end(), 1),
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.code(), &e.to_string(), e.exit_code()),
    }
}
