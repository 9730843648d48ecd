use std::process::ExitCode;

use chalpha_cli::{finish, run, Cli, CliError};
use clap::Parser;

/// Caps the worker pool when set.
const THREADS_ENV: &str = "CHALPHA_THREADS";

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| run(&cli));
    ExitCode::from(finish(&cli, result))
}
