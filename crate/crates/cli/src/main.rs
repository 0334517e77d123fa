//! `su2dp`: solve, simulate and cross-check optimal control problems on
//! SU(2) from the command line.
//!
//! Exit codes: 0 on success, 1 on usage or configuration errors, 2 when a
//! solve stops at `--max-iters` without converging.

mod args;
mod commands;
mod manifest;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::Status;
use manifest::RunManifest;

fn dispatch(cli: Cli) -> anyhow::Result<Status> {
    match cli.command {
        Command::Solve(a) => commands::run(commands::solve_config(&a)?, &a.out),
        Command::Oracle(a) => commands::run(commands::oracle_config(&a)?, &a.out),
        Command::Trajectory(a) => {
            let out = a.out.clone().unwrap_or_else(|| a.field.clone());
            commands::run(commands::trajectory_config(&a)?, &out)
        }
        Command::Rerun(a) => commands::run(RunManifest::read(&a.manifest)?.run, &a.out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match dispatch(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::NotConverged) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
