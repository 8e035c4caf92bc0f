//! Experiment runner behind the `genrank` binary.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error, 3 refused by
//! the capacity verdict.

pub mod args;
pub mod capacity;
pub mod decompose;
pub mod failure;
pub mod interpolate;
pub mod output;
pub mod rank_grid;

use std::process::ExitCode;

use args::{merge_config, Cli, Command};
use failure::Outcome;

pub fn run(cli: Cli) -> ExitCode {
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("genrank: {f}");
            f.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Outcome {
    match command {
        Command::RankGrid(a) => {
            let cfg = a.common.config.clone();
            rank_grid::run(&merge_config("rank-grid", a, cfg.as_deref())?)
        }
        Command::DecomposeVerify(a) => {
            let cfg = a.common.config.clone();
            decompose::run(&merge_config("decompose-verify", a, cfg.as_deref())?)
        }
        Command::Interpolate(a) => {
            let cfg = a.common.config.clone();
            interpolate::run(&merge_config("interpolate", a, cfg.as_deref())?)
        }
        Command::CapacityCheck(a) => {
            let cfg = a.common.config.clone();
            capacity::run(&merge_config("capacity-check", a, cfg.as_deref())?)
        }
    }
}
