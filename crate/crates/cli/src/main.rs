mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, FromArgMatches};
use ifsdyn::Error;

use crate::args::Cli;

/// Exit status for failures: probes that ran out of budget or did not
/// converge exit 2, everything else (validation, usage, IO) exits 1.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Budget { .. } | Error::Convergence { .. } | Error::Horizon { .. } | Error::Construction { .. }) => 2,
        _ => 1,
    }
}

fn usage_exit(err: clap::Error) -> ExitCode {
    let _ = err.print();
    match err.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            ExitCode::SUCCESS
        }
        _ => ExitCode::from(1),
    }
}

fn main() -> ExitCode {
    let raw: Vec<std::ffi::OsString> = std::env::args_os().collect();
    let mut cmd = Cli::command();
    let matches = match cmd.try_get_matches_from_mut(&raw) {
        Ok(m) => m,
        Err(e) => return usage_exit(e),
    };
    let matches = match matches.get_one::<std::path::PathBuf>("config").cloned() {
        Some(path) => {
            let extra = match config::extra_args(&cmd, &matches, &path) {
                Ok(extra) => extra,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    return ExitCode::from(1);
                }
            };
            let mut all = raw.clone();
            all.extend(extra);
            match cmd.try_get_matches_from_mut(&all) {
                Ok(m) => m,
                Err(e) => return usage_exit(e),
            }
        }
        None => matches,
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => return usage_exit(e),
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
