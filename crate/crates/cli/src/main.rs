#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::process::ExitCode;

use clap::Parser;

mod commands;
mod config;
mod verify;

use config::RunConfig;

fn main() -> ExitCode {
    let config = RunConfig::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::FAILURE;
    }
    match commands::run(&config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// `BRIDGE_THREADS` caps the worker pool. Output never depends on it.
fn init_threads() -> anyhow::Result<()> {
    if let Ok(raw) = std::env::var("BRIDGE_THREADS") {
        let n: usize = raw
            .trim()
            .parse()
            .map_err(|_| anyhow::anyhow!("BRIDGE_THREADS must be a positive integer, got {raw:?}"))?;
        if n == 0 {
            anyhow::bail!("BRIDGE_THREADS must be a positive integer, got 0");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}
