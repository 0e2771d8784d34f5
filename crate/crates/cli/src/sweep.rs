//! Config-driven Cartesian sweeps.
//!
//! A config is a sequence of `key = value` or `key = [v1, v2, ...]` lines
//! with `#` comments. `command` names the subcommand (possibly two words);
//! every other key becomes the option `--key` with underscores turned into
//! hyphens. Boolean options take `true` or `false`.

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::mpsc;

use clap::Parser;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::app::{csv_string, execute, write_file, EXIT_FAIL, EXIT_PASS, EXIT_USAGE};
use crate::args::{Cli, Command, SweepArgs};
use crate::report::Report;

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub command: Vec<String>,
    /// Grid axes in file order.
    pub params: Vec<(String, Vec<String>)>,
}

const RESERVED: [&str; 2] = ["output", "csv"];

pub fn parse_config(text: &str) -> Result<SweepConfig, String> {
    let mut command = None;
    let mut params: Vec<(String, Vec<String>)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |msg: &str| format!("line {}: {msg}", lineno + 1);
        let (key, value) = line.split_once('=').ok_or_else(|| at("expected 'key = value'"))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(at(&format!("invalid key '{key}'")));
        }
        if RESERVED.contains(&key) {
            return Err(at(&format!("'{key}' is set by the sweep itself")));
        }
        if key == "command" || params.iter().any(|(k, _)| k == key) {
            if key != "command" || command.is_some() {
                return Err(at(&format!("duplicate key '{key}'")));
            }
        }
        let values = if let Some(inner) = value.strip_prefix('[') {
            let inner = inner.strip_suffix(']').ok_or_else(|| at("unterminated list"))?;
            let items: Vec<String> = inner.split(',').map(|s| s.trim().to_string()).collect();
            if items.len() == 1 && items[0].is_empty() {
                Vec::new()
            } else if items.iter().any(|s| s.is_empty()) {
                return Err(at("empty list item"));
            } else {
                items
            }
        } else if value.is_empty() {
            return Err(at("missing value"));
        } else {
            vec![value.to_string()]
        };
        if key == "command" {
            if values.len() != 1 {
                return Err(at("command takes a single value"));
            }
            command = Some(values[0].split_whitespace().map(String::from).collect());
        } else {
            params.push((key.to_string(), values));
        }
    }
    let command: Vec<String> = command.ok_or("missing 'command'")?;
    if command.first().is_some_and(|c| c == "sweep") {
        return Err("a sweep cannot run sweeps".into());
    }
    Ok(SweepConfig { command, params })
}

impl SweepConfig {
    /// Cartesian product of the grid axes, first axis slowest.
    pub fn cells(&self) -> Vec<Vec<(String, String)>> {
        let mut cells: Vec<Vec<(String, String)>> = vec![Vec::new()];
        for (k, values) in &self.params {
            cells = cells
                .into_iter()
                .flat_map(|c| {
                    values.iter().map(move |v| {
                        let mut c = c.clone();
                        c.push((k.clone(), v.clone()));
                        c
                    })
                })
                .collect();
        }
        cells
    }

    pub fn argv(&self, cell: &[(String, String)]) -> Vec<String> {
        let mut argv = vec!["sigma2".to_string()];
        argv.extend(self.command.iter().cloned());
        for (k, v) in cell {
            let flag = format!("--{}", k.replace('_', "-"));
            match v.as_str() {
                "true" => argv.push(flag),
                "false" => {}
                _ => {
                    argv.push(flag);
                    argv.push(v.clone());
                }
            }
        }
        argv
    }
}

/// Pool size from `SIGMA2_THREADS`, or rayon's default when unset.
fn thread_count() -> usize {
    std::env::var("SIGMA2_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .unwrap_or(0)
}

struct CellResult {
    id: usize,
    report: Option<String>,
    csv: Option<String>,
    exit: i32,
    pass: bool,
    headline: Map<String, Value>,
    error: Option<String>,
}

fn run_cell(id: usize, cli: &Cli) -> CellResult {
    let exec = execute(cli);
    let mut out = CellResult {
        id,
        report: None,
        csv: None,
        exit: exec.exit,
        pass: false,
        headline: exec.extras.headline,
        error: exec.usage_error,
    };
    if let Some(r) = exec.report {
        out.pass = r.pass;
        if let Some(e) = r.outputs.get("error").and_then(Value::as_str) {
            out.error = Some(e.to_string());
        }
        match r.render() {
            Ok(t) => out.report = Some(t),
            Err(e) => {
                out.exit = EXIT_FAIL;
                out.pass = false;
                out.error = Some(e);
            }
        }
    }
    if let Some(t) = exec.extras.csv {
        out.csv = csv_string(&t).ok();
    }
    out
}

pub fn run_sweep(cli: &Cli, args: &SweepArgs) -> i32 {
    let Some(dir) = cli.output.as_deref() else {
        eprintln!("error: sweep needs --output <directory>");
        return EXIT_USAGE;
    };
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return EXIT_USAGE;
        }
    };
    let config = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return EXIT_USAGE;
        }
    };
    let cells = config.cells();
    let mut parsed = Vec::with_capacity(cells.len());
    for cell in &cells {
        match Cli::try_parse_from(config.argv(cell)) {
            Ok(c) if !matches!(c.command, Command::Sweep(_)) => parsed.push(c),
            Ok(_) => {
                eprintln!("error: a sweep cannot run sweeps");
                return EXIT_USAGE;
            }
            Err(e) => {
                eprintln!("error: cell {:?} does not parse:\n{e}", config.argv(cell));
                return EXIT_USAGE;
            }
        }
    }
    if let Err(e) = std::fs::create_dir_all(dir) {
        eprintln!("error: cannot create {}: {e}", dir.display());
        return EXIT_USAGE;
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(thread_count()).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return EXIT_USAGE;
        }
    };

    let (tx, rx) = mpsc::channel::<CellResult>();
    let mut results: Vec<CellResult> = Vec::with_capacity(parsed.len());
    let mut write_error = None;
    std::thread::scope(|scope| {
        let parsed = &parsed;
        scope.spawn(move || {
            pool.install(|| {
                parsed
                    .par_iter()
                    .enumerate()
                    .for_each_with(tx, |tx, (i, c)| {
                        let _ = tx.send(run_cell(i, c));
                    })
            })
        });
        for res in rx {
            if let Err(e) = write_cell(dir, &res) {
                write_error.get_or_insert(e);
            }
            results.push(res);
        }
    });
    if let Some(e) = write_error {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    results.sort_by_key(|r| r.id);

    let index = index_report(&args.config, &config, &cells, &results);
    let rendered = match index.render() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAIL;
        }
    };
    if let Err(e) = write_file(&dir.join("index.json"), &rendered) {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    if args.index_csv {
        if let Err(e) = index_csv(&config, &cells, &results).and_then(|s| write_file(&dir.join("index.csv"), &s)) {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    }
    if index.pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

fn cell_stem(id: usize) -> String {
    format!("cell-{id:04}")
}

fn write_cell(dir: &Path, r: &CellResult) -> Result<(), String> {
    if let Some(t) = &r.report {
        write_file(&dir.join(format!("{}.json", cell_stem(r.id))), t)?;
    }
    if let Some(c) = &r.csv {
        write_file(&dir.join(format!("{}.csv", cell_stem(r.id))), c)?;
    }
    Ok(())
}

fn index_report(config_path: &Path, config: &SweepConfig, cells: &[Vec<(String, String)>], results: &[CellResult]) -> Report {
    let mut r = Report::new("sweep");
    r.input("config", config_path.display().to_string())
        .input("command", config.command.join(" "));
    let grid: Map<String, Value> = config
        .params
        .iter()
        .map(|(k, v)| (k.clone(), Value::Array(v.iter().map(|s| Value::String(s.clone())).collect())))
        .collect();
    r.input("grid", Value::Object(grid));
    let entries: Vec<Value> = results
        .iter()
        .map(|res| {
            let params: Map<String, Value> = cells[res.id]
                .iter()
                .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                .collect();
            let mut e = json!({
                "id": res.id,
                "params": params,
                "pass": res.pass,
                "exit_code": res.exit,
                "headline": Value::Object(res.headline.clone()),
            });
            if res.report.is_some() {
                e["report"] = Value::String(format!("{}.json", cell_stem(res.id)));
            }
            if res.csv.is_some() {
                e["csv"] = Value::String(format!("{}.csv", cell_stem(res.id)));
            }
            if let Some(err) = &res.error {
                e["error"] = Value::String(err.clone());
            }
            e
        })
        .collect();
    let failed = results.iter().filter(|r| !r.pass).count();
    r.output("cells", Value::Array(entries))
        .output("total", results.len())
        .output("failed", failed);
    r.pass = failed == 0;
    r
}

fn index_csv(config: &SweepConfig, cells: &[Vec<(String, String)>], results: &[CellResult]) -> Result<String, String> {
    let keys: BTreeSet<&String> = results.iter().flat_map(|r| r.headline.keys()).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| e.to_string();
    let mut header: Vec<String> = vec!["id".into()];
    header.extend(config.params.iter().map(|(k, _)| k.clone()));
    header.extend(["pass".to_string(), "exit_code".to_string()]);
    header.extend(keys.iter().map(|k| k.to_string()));
    w.write_record(&header).map_err(err)?;
    for res in results {
        let mut row: Vec<String> = vec![res.id.to_string()];
        row.extend(cells[res.id].iter().map(|(_, v)| v.clone()));
        row.push(res.pass.to_string());
        row.push(res.exit.to_string());
        for k in &keys {
            row.push(match res.headline.get(*k) {
                Some(Value::Number(n)) if n.is_f64() => format!("{:.16e}", n.as_f64().unwrap_or(f64::NAN)),
                Some(Value::String(s)) => s.clone(),
                Some(v) => v.to_string(),
                None => String::new(),
            });
        }
        w.write_record(&row).map_err(err)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| e.to_string())?).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_scalars_lists_and_comments() {
        let c = parse_config(
            "# counterexample sweep\ncommand = ellipsoid counterexample\neps = [0.1, 0.01]  # grid\nn = 3\n",
        )
        .unwrap();
        assert_eq!(c.command, vec!["ellipsoid", "counterexample"]);
        assert_eq!(c.params, vec![("eps".into(), vec!["0.1".into(), "0.01".into()]), ("n".into(), vec!["3".into()])]);
        assert_eq!(c.cells().len(), 2);
        assert_eq!(
            c.argv(&c.cells()[1]),
            vec!["sigma2", "ellipsoid", "counterexample", "--eps", "0.01", "--n", "3"]
        );
    }

    #[test]
    fn empty_list_gives_no_cells() {
        let c = parse_config("command = cone\nlambda = []\n").unwrap();
        assert!(c.cells().is_empty());
    }

    #[test]
    fn cartesian_order_first_axis_slowest() {
        let c = parse_config("command = shoot\nn = [3, 4]\nfamily_index = [0, 1, 2]\n").unwrap();
        let cells = c.cells();
        assert_eq!(cells.len(), 6);
        assert_eq!(cells[1], vec![("n".into(), "3".into()), ("family_index".into(), "1".into())]);
        assert_eq!(c.argv(&cells[0])[4], "--family-index");
    }

    #[test]
    fn booleans_become_flags() {
        let c = parse_config("command = shoot\nbubble_restriction = [true, false]\n").unwrap();
        let cells = c.cells();
        assert_eq!(c.argv(&cells[0]), vec!["sigma2", "shoot", "--bubble-restriction"]);
        assert_eq!(c.argv(&cells[1]), vec!["sigma2", "shoot"]);
    }

    #[test]
    fn rejects_malformed_configs() {
        for bad in [
            "eps = 1\n",
            "command = cone\ncommand = cone\n",
            "command = cone\nk = 1\nk = 2\n",
            "command = cone\nk 2\n",
            "command = cone\nk = [1, 2\n",
            "command = cone\noutput = x\n",
            "command = sweep\n",
            "command = cone\nbad key = 1\n",
            "command = cone\nk = [1, , 2]\n",
        ] {
            assert!(parse_config(bad).is_err(), "{bad:?}");
        }
    }
}
