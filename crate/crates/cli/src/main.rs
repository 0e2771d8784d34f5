mod app;
mod args;
mod commands;
mod report;
mod sweep;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};

use crate::args::{Cli, Command};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => app::EXIT_PASS,
                _ => app::EXIT_USAGE,
            };
            let _ = e.print();
            if code == app::EXIT_USAGE && !e.to_string().contains("Usage:") {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            std::process::exit(code);
        }
    };
    let code = match &cli.command {
        Command::Sweep(a) => sweep::run_sweep(&cli, a),
        _ => app::run_single(&cli),
    };
    std::process::exit(code);
}
