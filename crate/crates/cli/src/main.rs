//! `minkdetect` command-line front end.
//!
//! Exit status: 0 success, 1 usage error, 2 data error, 3 numeric error.

mod args;
mod commands;
mod output;

use std::fmt;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use minkdetect::ErrorKind;

use crate::args::{Cli, Command};

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }

    pub fn write(path: &Path, err: std::io::Error) -> Self {
        minkdetect::Error::Write {
            path: path.to_path_buf(),
            source: err,
        }
        .into()
    }
}

impl From<minkdetect::Error> for CliError {
    fn from(e: minkdetect::Error) -> Self {
        let code = match e.kind() {
            ErrorKind::Usage => 1,
            ErrorKind::Data => 2,
            ErrorKind::Numeric => 3,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn init_threads(threads: usize) -> Result<(), CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::usage(format!("cannot start thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(a) => {
            init_threads(a.common.threads)?;
            commands::synth(&a)
        }
        Command::Analyze(a) => {
            init_threads(a.common.threads)?;
            commands::analyze(&a)
        }
        Command::Detect(a) => {
            init_threads(a.common.threads)?;
            commands::detect(&a)
        }
        Command::Sweep(a) => {
            init_threads(a.common.threads)?;
            commands::sweep(&a)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
