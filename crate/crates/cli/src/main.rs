//! `lowcount`: generate benchmark datasets, score series with the detector
//! suite, evaluate scores, run full benchmark sweeps, and render SVG figures.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 runtime failure. All
//! diagnostics go to standard error; machine-readable output goes to files.

mod commands;

use clap::error::ErrorKind;
use clap::Parser;

use commands::{Cli, CliError};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are successful exits, anything else is usage
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => {}
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
    }
}
