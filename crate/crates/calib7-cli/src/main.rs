//! `calib7`: batch verification of coassociative constructions.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 bad input, 3 failed precondition.

mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use config::Cli;

fn init_threads() -> Result<(), String> {
    if let Ok(v) = std::env::var("CALIB7_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| format!("CALIB7_THREADS must be a positive integer, got {v:?}"))?;
        if n == 0 {
            return Err("CALIB7_THREADS must be positive".into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(commands::EXIT_INPUT);
    }
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
