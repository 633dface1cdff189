// negated comparisons reject NaN on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod figures;
mod verify;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{expand_config, Cli, Command};
use commands::{CliError, CliResult};

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Keyrate(a) => commands::cmd_keyrate(a).map(drop),
        Command::Scan(a) => commands::cmd_scan(a).map(drop),
        Command::Simulate(a) => commands::cmd_simulate(a).map(drop),
        Command::Verify(a) => verify::cmd_verify(a).map(drop),
        Command::Figures(a) => figures::cmd_figures(a).map(drop),
    }
}

fn main() -> ExitCode {
    let argv = match expand_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            return ExitCode::from(if ok { 0 } else { 1 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(msg) | CliError::Io(msg) => eprintln!("error: {msg}"),
                CliError::Abort => eprintln!("protocol aborted: no secret key can be extracted"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}
