use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    genrank_cli::run(genrank_cli::args::Cli::parse())
}
