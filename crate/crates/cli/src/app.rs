use std::io::Write;
use std::path::Path;

use clap::CommandFactory;

use crate::args::{Cli, Command};
use crate::commands::{command_name, run, CliError, Extras};
use crate::report::Report;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAIL: i32 = 2;

pub struct Execution {
    pub report: Option<Report>,
    pub extras: Extras,
    pub exit: i32,
    /// Usage error message when no report was produced.
    pub usage_error: Option<String>,
}

/// Runs a parsed non-sweep invocation.
pub fn execute(cli: &Cli) -> Execution {
    let mut report = Report::new(command_name(&cli.command));
    let mut extras = Extras::default();
    match run(&cli.command, cli.seed, &mut report, &mut extras) {
        Ok(()) => {
            let exit = if report.pass { EXIT_PASS } else { EXIT_FAIL };
            Execution {
                report: Some(report),
                extras,
                exit,
                usage_error: None,
            }
        }
        Err(CliError::Numerical(msg)) => {
            report.pass = false;
            report.output("error", msg);
            Execution {
                report: Some(report),
                extras,
                exit: EXIT_FAIL,
                usage_error: None,
            }
        }
        Err(CliError::Usage(msg)) => Execution {
            report: None,
            extras,
            exit: EXIT_USAGE,
            usage_error: Some(msg),
        },
    }
}

pub fn csv_string(table: &[[f64; 6]]) -> Result<String, String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| e.to_string();
    w.write_record(["r", "u", "du", "ddu", "sigma1", "sigma2"]).map_err(io)?;
    for row in table {
        w.write_record(row.iter().map(|v| format!("{v:.16e}"))).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| e.to_string())?;
    String::from_utf8(bytes).map_err(|e| e.to_string())
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), String> {
    std::fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// Emits the report and CSV of a single invocation and returns the exit code.
pub fn run_single(cli: &Cli) -> i32 {
    debug_assert!(!matches!(cli.command, Command::Sweep(_)));
    let exec = execute(cli);
    if let Some(msg) = exec.usage_error {
        eprintln!("error: {msg}\n\n{}", Cli::command().render_usage());
        return EXIT_USAGE;
    }
    let report = exec.report.expect("report present without usage error");
    let text = match report.render() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAIL;
        }
    };
    let written = match &cli.output {
        Some(p) => write_file(p, &text),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    if let Some(path) = &cli.csv {
        match &exec.extras.csv {
            Some(table) => {
                if let Err(e) = csv_string(table).and_then(|s| write_file(path, &s)) {
                    eprintln!("error: {e}");
                    return EXIT_USAGE;
                }
            }
            None => eprintln!("note: {} has no CSV series", report.command),
        }
    }
    exec.exit
}
