//! `photonstat`: reproducible photon-statistics experiments from the shell.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/IO error, 3 numeric or
//! domain error.

mod args;
mod commands;
mod io;

use clap::Parser;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(anyhow::Error),
    Numeric(photonstat::Error),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Data(err) => write!(f, "{err:#}"),
            CliError::Numeric(err) => write!(f, "{err}"),
        }
    }
}

impl From<photonstat::Error> for CliError {
    fn from(err: photonstat::Error) -> Self {
        CliError::Numeric(err)
    }
}

fn main() {
    let cli = match args::Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap prints its own message (help/version go to stdout).
            let is_help = matches!(
                err.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = err.print();
            std::process::exit(if is_help { 0 } else { 1 });
        }
    };

    let command = match (cli.config, cli.command) {
        (Some(path), None) => match commands::load_command(&path) {
            Ok(command) => command,
            Err(err) => exit_with(err),
        },
        (None, Some(command)) => command,
        (Some(_), Some(_)) => exit_with(CliError::Usage(
            "give either --config or a subcommand, not both".into(),
        )),
        (None, None) => exit_with(CliError::Usage(
            "missing subcommand; see `photonstat --help`".into(),
        )),
    };

    if let Err(err) = commands::dispatch(command) {
        exit_with(err);
    }
}

fn exit_with(err: CliError) -> ! {
    eprintln!("error: {err}");
    std::process::exit(err.code());
}
