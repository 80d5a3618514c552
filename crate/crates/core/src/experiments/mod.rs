//! Named experiments: configuration, execution and artifact writing.

pub mod catalog;
pub mod config;
mod runners;

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::Result;

pub use catalog::{find, CatalogEntry, EXPERIMENTS};
pub use config::{BoundaryMode, ExperimentConfig};

/// One flagged invariant. A failed hard check means exit status 1, a failed soft check 2.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub hard: bool,
    pub detail: String,
}

impl Check {
    pub fn hard(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, hard: true, detail: detail.into() }
    }

    pub fn soft(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, hard: false, detail: detail.into() }
    }
}

/// What a runner produces before anything touches the disk.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub results: Value,
    pub checks: Vec<Check>,
    /// (file name, contents)
    pub files: Vec<(String, Vec<u8>)>,
}

impl Outcome {
    pub fn status(&self) -> i32 {
        if self.checks.iter().any(|c| c.hard && !c.passed) {
            1
        } else if self.checks.iter().any(|c| !c.passed) {
            2
        } else {
            0
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub status: i32,
    pub dir: PathBuf,
    pub summary: Value,
    pub outcome: Outcome,
}

/// Runs the experiment without writing anything.
pub fn execute(config: &ExperimentConfig) -> Result<Outcome> {
    config.validate()?;
    runners::run(config)
}

/// Summary document of a finished run.
pub fn summary(config: &ExperimentConfig, outcome: &Outcome) -> Value {
    let entry = find(&config.experiment);
    json!({
        "experiment": config.experiment,
        "anchor": entry.map(|e| e.anchor),
        "tier": entry.map(|e| e.tier),
        "config_hash": config.hash(),
        "status": outcome.status(),
        "checks": outcome.checks,
        "results": outcome.results,
    })
}

/// Runs the experiment and writes its CSV files, `summary.json`, `config.json` and `MANIFEST`
/// into `dir` (the config's `out` when `None`).
pub fn run(config: &ExperimentConfig, dir: Option<&Path>) -> Result<RunReport> {
    let outcome = execute(config)?;
    let dir = dir.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(&config.out));
    fs::create_dir_all(&dir)?;
    let summary = summary(config, &outcome);
    let mut files = outcome.files.clone();
    files.push(("summary.json".into(), pretty(&summary)?));
    files.push(("config.json".into(), pretty(&serde_json::to_value(config)?)?));
    let mut manifest = format!(
        "experiment {}\nconfig_sha256 {}\n{} {}\nstatus {}\n",
        config.experiment,
        config.hash(),
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION"),
        outcome.status()
    );
    for (name, bytes) in &files {
        fs::write(dir.join(name), bytes)?;
        let h: String = Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect();
        manifest.push_str(&format!("file {name} {} {h}\n", bytes.len()));
    }
    fs::write(dir.join("MANIFEST"), manifest)?;
    Ok(RunReport { status: outcome.status(), dir, summary, outcome })
}

fn pretty(v: &Value) -> Result<Vec<u8>> {
    let mut b = serde_json::to_vec_pretty(v)?;
    b.push(b'\n');
    Ok(b)
}

/// Machine-readable catalog.
pub fn list_experiments() -> Value {
    serde_json::to_value(EXPERIMENTS).unwrap_or_default()
}

/// Resolves a config and reports the applied values or the errors.
pub fn validate(experiment: &str, file: Option<&Value>, sets: &[String]) -> Value {
    match ExperimentConfig::resolve(experiment, file, sets) {
        Ok(c) => json!({ "valid": true, "config_hash": c.hash(), "config": c }),
        Err(e) => json!({ "valid": false, "error": e.to_string() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_has_nine_entries_with_tiers_and_anchors() {
        let v = list_experiments();
        let a = v.as_array().unwrap();
        assert_eq!(a.len(), 9);
        assert!(a.iter().all(|e| e["tier"].is_string() && !e["anchor"].as_str().unwrap().is_empty()));
    }

    #[test]
    fn status_follows_check_severity() {
        let mut o = Outcome::default();
        assert_eq!(o.status(), 0);
        o.checks.push(Check::soft("a", false, ""));
        assert_eq!(o.status(), 2);
        o.checks.push(Check::hard("b", false, ""));
        assert_eq!(o.status(), 1);
    }
}
