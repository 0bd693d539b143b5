// SPDX-License-Identifier: Apache-2.0
// Copyright The TASS Toolkit Authors

use std::process::ExitCode;

use tass_core::cli::{self, CliError};

/// Cap rayon's worker count when TASS_THREADS is set.
fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("TASS_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            CliError::Usage(format!("TASS_THREADS={value:?} is not a positive integer"))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure {threads} threads: {e}")))
}

fn main() -> ExitCode {
    let result = configure_threads().and_then(|()| cli::run(std::env::args_os()));
    match result {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{}", err.to_json_line());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
