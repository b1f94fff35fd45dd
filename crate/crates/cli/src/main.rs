//! `arraypool` command-line interface.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error, 3 I/O
//! error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Failure;

fn run(cli: &Cli) -> Result<(), Failure> {
    let text = match &cli.command {
        Command::Eval(a) => commands::eval(a)?,
        Command::Optimize(a) => commands::optimize(a)?,
        Command::Table(a) => commands::table(a)?,
        Command::Compare(a) => commands::compare(a)?,
        Command::Robust(a) => commands::robust(a)?,
        Command::Verify => commands::verify()?,
        Command::Simulate(a) => commands::simulate(a)?,
    };
    commands::emit(&text)
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors and 0 for --help/--version.
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Usage(msg) => eprintln!("error: {msg}"),
                Failure::Io(msg) => eprintln!("error: {msg}"),
                Failure::Verification => eprintln!("error: verification failed"),
            }
            ExitCode::from(failure.code() as u8)
        }
    }
}
