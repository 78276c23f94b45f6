use std::process::ExitCode;

use cantor_cli::cli::Cli;
use cantor_cli::commands::{run, Usage};
use cantor_core::Error;
use clap::Parser;

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_PRECONDITION: u8 = 4;

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() {
        return EXIT_USAGE;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::Parse(_) | Error::Domain(_)) => EXIT_USAGE,
        Some(Error::Data { .. } | Error::Io(_) | Error::Csv(_) | Error::Json(_)) => EXIT_DATA,
        Some(_) => EXIT_PRECONDITION,
        None if err.downcast_ref::<std::io::Error>().is_some() => EXIT_DATA,
        None => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = cli.resolve().and_then(|cfg| run(&cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
