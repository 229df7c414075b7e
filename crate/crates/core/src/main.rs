use std::process::ExitCode;

use clap::Parser;

use cipherpipe::cli::{run, Cli, THREADS_ENV};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = std::env::var(THREADS_ENV).ok();
    match run(&cli, threads.as_deref()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cipherpipe: error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
