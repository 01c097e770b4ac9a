mod args;
mod commands;
mod config_file;
mod output;

use std::process::ExitCode;

use clap::Parser;
use omt_core::{ErrorKind, OmtError};

use args::{Cli, Command};

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;
const EXIT_IO: u8 = 5;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Omt(#[from] OmtError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Omt(e) => match e.kind() {
                ErrorKind::Usage => EXIT_USAGE,
                ErrorKind::Data => EXIT_DATA,
                ErrorKind::Numerical => EXIT_NUMERICAL,
                ErrorKind::Io => EXIT_IO,
            },
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let exec = commands::execution(cli.jobs)?;
    match cli.command {
        Command::Synth(a) => commands::synth(&a),
        Command::Run(a) => commands::run(&a),
        Command::Sweep(a) => commands::sweep(&a, exec),
        Command::Bench(a) => commands::bench(&a),
        Command::RocNn(a) => commands::roc_nn(&a, exec),
    }
}

fn main() -> ExitCode {
    let result = config_file::expand(std::env::args_os().collect()).and_then(|argv| {
        let cli = Cli::try_parse_from(argv).unwrap_or_else(|e| e.exit());
        dispatch(cli)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("omt: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
