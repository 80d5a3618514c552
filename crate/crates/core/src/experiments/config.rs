//! Experiment configuration: per-experiment defaults, JSON overrides and `key=value` flags.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::forward::dataset::Tier;
use crate::forward::source::SourceSpec;
use crate::geometry::domain::{Preset, TimeSpec};
use crate::geometry::weight::PsiMode;
use crate::reconstruction::AFrom;

use super::catalog::{find, EXPERIMENTS};

/// Boundary treatment of the Poisson step for F(·,t₀).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    None,
    Dirichlet,
    GammaOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub preset: Preset,
    pub cells: usize,
    /// Grid sizes of a refinement study.
    pub refinement: Vec<usize>,
    pub intervals: usize,
    pub t0: f64,
    pub delta: f64,
    pub horizon: f64,
    pub lambda: f64,
    /// `null` takes β from the admissible interval of the continuation constants.
    pub beta: Option<f64>,
    pub psi_mode: PsiMode,
    pub s_min: f64,
    pub s_max: f64,
    pub s_points: usize,
    pub source: SourceSpec,
    pub sigmas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub tier: Tier,
    /// Tikhonov weight of the quasi-reversibility solve.
    pub alpha: f64,
    /// Fixed s of the inverse-source solves.
    pub s: f64,
    pub max_exponent: f64,
    pub boundary: BoundaryMode,
    /// Penalty on F over ∂Ω∖Γ in the Γ-only Poisson step.
    pub extension_alpha: f64,
    pub a_from: AFrom,
    pub c_max: f64,
    pub random_sources: usize,
    pub out: String,
}

impl ExperimentConfig {
    pub fn defaults_for(experiment: &str) -> Result<Self> {
        let entry = find(experiment).ok_or_else(|| {
            let names: Vec<&str> = EXPERIMENTS.iter().map(|e| e.name).collect();
            Error::Config(format!("unknown experiment '{experiment}' (known: {})", names.join(", ")))
        })?;
        let time = TimeSpec::default();
        let mut c = Self {
            experiment: entry.name.into(),
            preset: Preset::Rect2dRightEdge,
            cells: 32,
            refinement: vec![],
            intervals: time.intervals,
            t0: time.t0,
            delta: time.delta,
            horizon: time.horizon,
            lambda: 1.0,
            beta: None,
            psi_mode: PsiMode::Squared,
            s_min: 2.0,
            s_max: 256.0,
            s_points: 8,
            source: SourceSpec::separated_default(),
            sigmas: vec![],
            seeds: vec![1],
            tier: Tier::D,
            alpha: 1e-10,
            s: 1.0,
            max_exponent: crate::reconstruction::qr::MAX_WEIGHT_EXPONENT,
            boundary: BoundaryMode::None,
            extension_alpha: 1e-2,
            a_from: AFrom::Snapshot,
            c_max: 1e6,
            random_sources: 20,
            out: format!("out/{}", entry.name),
        };
        match entry.name {
            "carleman_thm1" | "carleman_lemmas" => {
                c.cells = 48;
                c.lambda = 2.0;
                c.beta = Some(1.0);
            }
            "appendix_check" => {
                c.lambda = 2.0;
                c.beta = Some(1.0);
            }
            "continuation_sweep" => {
                c.sigmas = vec![1e-2, 1e-3, 1e-4, 1e-5];
                c.seeds = vec![1, 2, 3];
            }
            "inverse_source_i" => {
                c.intervals = 8;
                c.sigmas = vec![1e-3, 1e-4, 1e-5];
                c.tier = Tier::D1;
            }
            "inverse_source_ii" => {
                c.intervals = 8;
                c.sigmas = vec![1e-3, 1e-4, 1e-5];
                c.tier = Tier::D2;
                c.source = SourceSpec::decaying_default();
                c.boundary = BoundaryMode::GammaOnly;
            }
            "proposition1" => {
                c.intervals = 8;
                c.refinement = vec![16, 32, 48];
                c.tier = Tier::D1;
                c.source = SourceSpec::decaying_default();
                c.boundary = BoundaryMode::Dirichlet;
            }
            "obstruction_demo" => {
                c.cells = 16;
                c.intervals = 8;
                c.tier = Tier::D1;
                c.source = SourceSpec::obstruction_default(2);
            }
            _ => {}
        }
        Ok(c)
    }

    /// Defaults of `experiment`, then the keys of `file` (a JSON object), then `key=value` flags.
    /// Unknown keys are rejected together.
    pub fn resolve(experiment: &str, file: Option<&Value>, sets: &[String]) -> Result<Self> {
        let mut value = serde_json::to_value(Self::defaults_for(experiment)?)?;
        let mut unknown = Vec::new();
        if let Some(f) = file {
            let obj = f.as_object().ok_or_else(|| Error::Config("config file must hold a JSON object".into()))?;
            if let Some(name) = obj.get("experiment").and_then(Value::as_str) {
                if name != experiment {
                    return Err(Error::Config(format!("config is for '{name}', not '{experiment}'")));
                }
            }
            merge(&mut value, f, "", &mut unknown);
        }
        for s in sets {
            let (key, raw) = s.split_once('=').ok_or_else(|| Error::Config(format!("expected key=value, got '{s}'")))?;
            let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            if !set_path(&mut value, key.trim(), parsed) {
                unknown.push(key.trim().to_string());
            }
        }
        if !unknown.is_empty() {
            return Err(Error::Config(format!("unknown keys: {}", unknown.join(", "))));
        }
        let cfg: Self = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.sigmas.windows(2).any(|w| !(w[0] > w[1])) {
            bad.push("sigmas: noise levels must be strictly decreasing".to_string());
        }
        if self.sigmas.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            bad.push("sigmas: noise levels must be finite and non-negative".into());
        }
        if self.cells < 4 {
            bad.push("cells: need at least 4 cells per axis".into());
        }
        if self.refinement.windows(2).any(|w| w[1] <= w[0]) {
            bad.push("refinement: grid sizes must be strictly increasing".into());
        }
        if self.intervals < 4 || self.intervals % 2 != 0 {
            bad.push("intervals: need an even number of at least 4 time intervals".into());
        }
        if !(self.lambda > 0.0) {
            bad.push("lambda: must be positive".into());
        }
        if self.beta.is_some_and(|b| !(b >= 0.0)) {
            bad.push("beta: must be non-negative".into());
        }
        if !(self.s_min > 0.0 && self.s_max > self.s_min) || self.s_points < 3 {
            bad.push("s_min, s_max, s_points: need 0 < s_min < s_max and at least 3 points".into());
        }
        if !(self.alpha >= 0.0) || !(self.s > 0.0) || !(self.max_exponent > 0.0) || !(self.extension_alpha > 0.0) {
            bad.push("alpha, s, max_exponent, extension_alpha: must be positive".into());
        }
        if self.seeds.is_empty() {
            bad.push("seeds: need at least one seed".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad.join("; ")))
        }
    }

    pub fn time(&self) -> TimeSpec {
        TimeSpec { t0: self.t0, delta: self.delta, horizon: self.horizon, intervals: self.intervals }
    }

    /// SHA-256 of the canonical JSON of the resolved config, without the output directory.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).unwrap_or_default();
        if let Some(o) = v.as_object_mut() {
            o.remove("out");
        }
        let digest = Sha256::digest(v.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Copies `src` into `dst` key by key, recording keys `dst` does not have. Objects merge
/// recursively except for tagged enums (objects holding `family` or `kind`), which are replaced.
fn merge(dst: &mut Value, src: &Value, prefix: &str, unknown: &mut Vec<String>) {
    let (Some(d), Some(s)) = (dst.as_object_mut(), src.as_object()) else {
        *dst = src.clone();
        return;
    };
    for (k, v) in s {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match d.get_mut(k) {
            None if prefix.is_empty() => unknown.push(path),
            None => {
                d.insert(k.clone(), v.clone());
            }
            Some(slot) if slot.is_object() && v.is_object() && !is_tagged(v) => merge(slot, v, &path, unknown),
            Some(slot) => *slot = v.clone(),
        }
    }
}

fn is_tagged(v: &Value) -> bool {
    v.get("family").is_some() || v.get("kind").is_some()
}

/// Sets a dotted path. The top-level key must exist; nested keys may be new.
fn set_path(root: &mut Value, key: &str, value: Value) -> bool {
    let mut parts = key.split('.');
    let Some(first) = parts.next() else { return false };
    let Some(mut cur) = root.as_object_mut().and_then(|o| o.get_mut(first)) else {
        return false;
    };
    for p in parts {
        if !cur.is_object() {
            *cur = Value::Object(Map::new());
        }
        cur = cur.as_object_mut().unwrap().entry(p).or_insert(Value::Null);
    }
    *cur = value;
    true
}
