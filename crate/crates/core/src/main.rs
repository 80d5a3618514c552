use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::Value;

use ns_carleman::experiments::{self, ExperimentConfig};

#[derive(Parser)]
#[command(name = "ns-carleman", version, about = "Carleman-weight experiments for linearized Navier-Stokes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named experiment and write its artifacts.
    Run {
        experiment: String,
        /// JSON config; its keys override the experiment defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override one key, e.g. `--set cells=24` or `--set 'sigmas=[1e-2,1e-3]'`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        /// Output directory (default `out/<experiment>`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the experiment catalog as JSON.
    List,
    /// Resolve a config against the defaults and report the result.
    Validate {
        /// Experiment name; taken from the config's `experiment` key when omitted.
        experiment: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
}

fn read_config(path: &Option<PathBuf>) -> Result<Option<Value>, String> {
    let Some(p) = path else { return Ok(None) };
    let text = std::fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?;
    serde_json::from_str(&text).map(Some).map_err(|e| format!("invalid JSON in {}: {e}", p.display()))
}

// a closed pipe (`list | head`) is not an error
fn print_json(v: &Value) {
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(v).unwrap());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            print_json(&experiments::list_experiments());
            ExitCode::SUCCESS
        }
        Command::Validate { experiment, config, sets } => {
            let file = match read_config(&config) {
                Ok(f) => f,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            let name = experiment
                .or_else(|| file.as_ref().and_then(|f| f.get("experiment")).and_then(Value::as_str).map(String::from));
            let report = match name {
                Some(n) => experiments::validate(&n, file.as_ref(), &sets),
                None => serde_json::json!({ "valid": false, "error": "no experiment given and none in the config" }),
            };
            print_json(&report);
            if report["valid"] == Value::Bool(true) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::Run { experiment, config, sets, out } => {
            let cfg = read_config(&config)
                .and_then(|f| ExperimentConfig::resolve(&experiment, f.as_ref(), &sets).map_err(|e| e.to_string()));
            let cfg = match cfg {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            let start = Instant::now();
            match experiments::run(&cfg, out.as_deref()) {
                Ok(r) => {
                    for c in &r.outcome.checks {
                        let tag = if c.passed { "ok" } else if c.hard { "FAIL" } else { "flag" };
                        eprintln!("{tag:>4}  {}  {}", c.name, c.detail);
                    }
                    eprintln!("{} finished in {:.1} s, status {}, artifacts in {}", cfg.experiment, start.elapsed().as_secs_f64(), r.status, r.dir.display());
                    ExitCode::from(r.status as u8)
                }
                Err(e) => {
                    eprintln!("error: {} failed: {e}", cfg.experiment);
                    ExitCode::from(1)
                }
            }
        }
    }
}
