//! `perpetual`: boundary, prices, reference table, sweeps and bounds for the
//! perpetual American put under nonlinear volatility.
//!
//! Exit codes: 0 success, 1 failed `--check`, 2 configuration error,
//! 3 solver failure, 4 at least one failed sweep row.

mod args;
mod commands;
mod config;
mod error;
mod output;

use clap::Parser;

use args::{Cli, Command};

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Boundary(common) => commands::boundary(common),
        Command::Price { common, grid } => commands::price_curve(common, grid),
        Command::Table(args) => commands::table(args),
        Command::Sweep(args) => commands::sweep(args),
        Command::Bounds(common) => commands::bounds(common),
    };
    if let Err(e) = result {
        eprintln!("perpetual: {e}");
        std::process::exit(e.exit_code());
    }
}
