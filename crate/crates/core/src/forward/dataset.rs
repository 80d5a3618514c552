//! Lateral Cauchy data on Γ × I with data magnitudes, a-priori bounds and seeded noise.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::field::{SpaceTime, VectorField};
use crate::fields::grid::{BoundaryEntry, Face, Grid, TimeAxis};
use crate::fields::ops;
use crate::forward::expr::{curl, Expr, Smooth};
use crate::forward::funcs::StField;
use crate::forward::solution::ManufacturedSolution;
use crate::geometry::domain::DomainSpec;

/// Data tier: D (continuation), D₁ (first time derivative and an H³ snapshot),
/// D₂ (second time derivative and an H⁴ snapshot).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tier {
    D,
    D1,
    D2,
}

impl Tier {
    /// Highest time derivative of the traces.
    pub fn kmax(self) -> usize {
        match self {
            Tier::D => 0,
            Tier::D1 => 1,
            Tier::D2 => 2,
        }
    }

    /// Sobolev order of the snapshot norm, if any.
    pub fn snapshot_order(self) -> Option<usize> {
        match self {
            Tier::D => None,
            Tier::D1 => Some(3),
            Tier::D2 => Some(4),
        }
    }
}

impl std::str::FromStr for Tier {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "D" | "d" => Ok(Tier::D),
            "D1" | "d1" => Ok(Tier::D1),
            "D2" | "d2" => Ok(Tier::D2),
            _ => Err(Error::Config(format!("unknown data tier '{s}' (expected D, D1 or D2)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Standard deviation relative to the RMS of each trace.
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self { sigma: 0.0, seed: 0 }
    }
}

/// One trace sampled at every Γ quadrature entry and time node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub name: String,
    /// Order of the time derivative.
    pub k: usize,
    pub ncomp: usize,
    /// Index `(time * entries + entry) * ncomp + comp`.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Magnitudes {
    pub d: f64,
    pub d1: Option<f64>,
    pub d2: Option<f64>,
}

/// A-priori bounds computed from the full solution.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Bounds {
    pub m: f64,
    pub m1: f64,
    pub m2: f64,
    /// ‖F(·,t₀)‖_{H²(Ω)} when a source is supplied.
    pub m_source: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyDataset {
    pub tier: Tier,
    pub dim: usize,
    pub t0: f64,
    pub time: TimeAxis,
    pub grid: Grid,
    pub gamma: Vec<Face>,
    pub entries: Vec<BoundaryEntry>,
    pub traces: Vec<Trace>,
    /// Velocity at t₀ on every node (tiers D₁ and D₂).
    pub snapshot: Option<Vec<Vec<f64>>>,
    pub magnitudes: Magnitudes,
    /// Magnitudes of the injected perturbation alone.
    pub noise_magnitudes: Magnitudes,
    pub bounds: Bounds,
    pub noise: NoiseSpec,
    /// "analytic" or "stencil".
    pub derivatives: String,
}

/// Velocity input: closed form or sampled on the domain grid and time axis.
pub enum VelocityInput<'a> {
    Analytic(&'a ManufacturedSolution),
    Sampled(&'a SpaceTime<VectorField>),
}

/// Full-grid quantities of one time derivative order at one time slice.
struct Slice {
    v: Vec<Vec<f64>>,
    grad_v: Vec<Vec<f64>>,
    rot: Vec<Vec<f64>>,
    grad_xt_rot: Vec<Vec<f64>>,
}

const NAMES: [&str; 4] = ["v", "grad_v", "rot_v", "grad_xt_rot_v"];

fn prefix(k: usize) -> &'static str {
    ["", "dt_", "dt2_", "dt3_"][k]
}

impl Slice {
    fn parts(&self) -> [&Vec<Vec<f64>>; 4] {
        [&self.v, &self.grad_v, &self.rot, &self.grad_xt_rot]
    }
}

/// `slices[k][n]` for k ≤ kmax.
fn analytic_slices(sol: &ManufacturedSolution, grid: &Grid, time: &TimeAxis, kmax: usize) -> Vec<Vec<Slice>> {
    let dim = sol.dim;
    (0..=kmax)
        .map(|k| {
            let vk: Vec<StField> = sol.v.iter().map(|c| c.deriv([0; 3], k as u32)).collect();
            let grad: Vec<StField> = vk.iter().flat_map(|c| (0..dim).map(move |j| c.dx(j))).collect();
            let rot = curl(&vk);
            let gxt: Vec<StField> = rot
                .iter()
                .flat_map(|c| (0..dim).map(move |j| c.dx(j)).chain(std::iter::once(c.dt())))
                .collect();
            (0..time.n)
                .map(|n| {
                    let t = time.time(n);
                    let s = |fs: &[StField]| fs.iter().map(|f| Smooth::sample(f, grid, t)).collect::<Vec<_>>();
                    Slice { v: s(&vk), grad_v: s(&grad), rot: s(&rot), grad_xt_rot: s(&gxt) }
                })
                .collect()
        })
        .collect()
}

fn sampled_slices(field: &SpaceTime<VectorField>, kmax: usize) -> Result<Vec<Vec<Slice>>> {
    let nt = field.time.n;
    if nt < kmax + 4 {
        return Err(Error::TierUnavailable {
            requested: format!("time derivatives up to order {}", kmax + 1),
            reason: format!("only {nt} time slices are available"),
        });
    }
    let dim = field.slices[0].grid.dim();
    let mut ders = vec![field.clone()];
    for _ in 0..=kmax {
        let next = ops::time_derivative_vec(ders.last().unwrap())?;
        ders.push(next);
    }
    let rot_of = |v: &VectorField| -> Result<VectorField> { ops::curl(v) };
    (0..=kmax)
        .map(|k| {
            (0..nt)
                .map(|n| {
                    let v = &ders[k].slices[n];
                    let g = &v.grid;
                    let grad_v = v.comps.iter().flat_map(|c| (0..dim).map(move |j| ops::d1(g, c, j))).collect();
                    let rot = rot_of(v)?;
                    let rot_next = rot_of(&ders[k + 1].slices[n])?;
                    let grad_xt_rot = rot
                        .comps
                        .iter()
                        .zip(&rot_next.comps)
                        .flat_map(|(c, ct)| {
                            (0..dim).map(move |j| ops::d1(g, c, j)).chain(std::iter::once(ct.clone()))
                        })
                        .collect();
                    Ok(Slice { v: v.comps.clone(), grad_v, rot: rot.comps, grad_xt_rot })
                })
                .collect()
        })
        .collect()
}

/// `Σ_names sqrt(∫_{faces×I} |q|²)` for one derivative order.
fn boundary_norms(slices: &[Slice], entries: &[BoundaryEntry], time: &TimeAxis) -> f64 {
    let tw = time.weights();
    (0..4)
        .map(|p| {
            let mut s = 0.0;
            for (n, sl) in slices.iter().enumerate() {
                for e in entries {
                    let q: f64 = sl.parts()[p].iter().map(|c| c[e.node] * c[e.node]).sum();
                    s += tw[n] * e.weight * q;
                }
            }
            s.sqrt()
        })
        .sum()
}

fn h1_norm(grid: &Grid, comps: &[Vec<f64>], grads: &[Vec<f64>]) -> f64 {
    let w = grid.trapezoid_weights();
    let mut s = 0.0;
    for c in comps.iter().chain(grads) {
        s += c.iter().zip(&w).map(|(v, w)| w * v * v).sum::<f64>();
    }
    s.sqrt()
}

fn multi_indices(dim: usize, order: usize) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for a in 0..=order as u32 {
        for b in 0..=order as u32 {
            for c in 0..=order as u32 {
                let e = [a, b, if dim == 3 { c } else { 0 }];
                if (dim == 3 || c == 0) && (e[0] + e[1] + e[2]) as usize <= order {
                    out.push(e);
                }
            }
        }
    }
    out
}

/// ‖v(·,t)‖_{H^m(Ω)} for a closed-form velocity.
pub fn sobolev_norm_analytic(v: &[StField], grid: &Grid, t: f64, m: usize) -> f64 {
    let w = grid.trapezoid_weights();
    let mut s = 0.0;
    for e in multi_indices(grid.dim(), m) {
        for c in v {
            let d = c.deriv(e, 0);
            s += Smooth::sample(&d, grid, t).iter().zip(&w).map(|(x, w)| w * x * x).sum::<f64>();
        }
    }
    s.sqrt()
}

/// ‖·‖_{H^m(Ω)} of nodal components by repeated stencils.
pub fn sobolev_norm_sampled(comps: &[Vec<f64>], grid: &Grid, m: usize) -> f64 {
    let w = grid.trapezoid_weights();
    let mut s = 0.0;
    for e in multi_indices(grid.dim(), m) {
        for c in comps {
            let mut d = c.clone();
            for (axis, &n) in e.iter().enumerate() {
                for _ in 0..n {
                    d = ops::d1(grid, &d, axis);
                }
            }
            s += d.iter().zip(&w).map(|(x, w)| w * x * x).sum::<f64>();
        }
    }
    s.sqrt()
}

/// ‖F(·,t₀)‖_{H²(Ω)}.
pub fn source_h2_norm(f: &[Expr], grid: &Grid, t0: f64) -> f64 {
    let w = grid.trapezoid_weights();
    let mut s = 0.0;
    for e in multi_indices(grid.dim(), 2) {
        for c in f {
            let d = c.deriv(e, 0);
            s += Smooth::sample(&d, grid, t0).iter().zip(&w).map(|(x, w)| w * x * x).sum::<f64>();
        }
    }
    s.sqrt()
}

/// Samples the Γ traces required by `tier`, computes D, D₁, D₂ and the bounds, and adds
/// seeded Gaussian noise.
pub fn generate_cauchy_data(
    input: VelocityInput,
    domain: &DomainSpec,
    tier: Tier,
    noise: NoiseSpec,
    source: Option<&[Expr]>,
) -> Result<CauchyDataset> {
    let grid = &domain.grid;
    let time = domain.time;
    let dim = grid.dim();
    let t0 = domain.t0;
    let kb = tier.kmax().max(2);
    let (slices, derivatives) = match input {
        VelocityInput::Analytic(sol) => {
            if sol.dim != dim {
                return Err(Error::ShapeMismatch(format!("{}-d solution on a {dim}-d domain", sol.dim)));
            }
            (analytic_slices(sol, grid, &time, kb), "analytic")
        }
        VelocityInput::Sampled(f) => {
            if f.time != time || f.slices.iter().any(|s| s.grid != *grid) {
                return Err(Error::ShapeMismatch("sampled velocity does not match the domain grid".into()));
            }
            let kneeded = if f.time.n >= kb + 4 { kb } else { tier.kmax() };
            (sampled_slices(f, kneeded)?, "stencil")
        }
    };
    let k0 = time.index_of(t0).ok_or_else(|| Error::InvalidArgument("t0 is not a time node".into()))?;

    let gq = grid.boundary_quadrature(&domain.gamma).entries;
    let all = grid.boundary_quadrature(&grid.faces()).entries;

    // traces on Γ
    let mut traces = Vec::new();
    for (k, sl) in slices.iter().enumerate().take(tier.kmax() + 1) {
        for (p, name) in NAMES.iter().enumerate() {
            let ncomp = sl[0].parts()[p].len();
            let mut values = Vec::with_capacity(time.n * gq.len() * ncomp);
            for s in sl {
                for e in &gq {
                    for c in s.parts()[p] {
                        values.push(c[e.node]);
                    }
                }
            }
            traces.push(Trace { name: format!("{}{}", prefix(k), name), k, ncomp, values });
        }
    }

    // snapshot
    let snapshot_exact: Option<Vec<Vec<f64>>> = tier.snapshot_order().map(|_| slices[0][k0].v.clone());
    let snap_norm = |comps: &[Vec<f64>], m: usize| -> f64 {
        match input {
            VelocityInput::Analytic(sol) if snapshot_is(comps, &slices[0][k0].v) => sobolev_norm_analytic(&sol.v, grid, t0, m),
            _ => sobolev_norm_sampled(comps, grid, m),
        }
    };

    // noise
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let mut perturb = |vals: &mut [f64]| -> Vec<f64> {
        let rms = (vals.iter().map(|v| v * v).sum::<f64>() / vals.len().max(1) as f64).sqrt();
        let mut delta = vec![0.0; vals.len()];
        for (v, d) in vals.iter_mut().zip(delta.iter_mut()) {
            let xi: f64 = StandardNormal.sample(&mut rng);
            *d = noise.sigma * rms * xi;
            *v += *d;
        }
        delta
    };
    let mut noise_traces = Vec::with_capacity(traces.len());
    for tr in traces.iter_mut() {
        let delta = if noise.sigma > 0.0 { perturb(&mut tr.values) } else { vec![0.0; tr.values.len()] };
        noise_traces.push(Trace { values: delta, ..tr.clone() });
    }
    let mut snapshot = snapshot_exact.clone();
    let mut snapshot_noise: Option<Vec<Vec<f64>>> = None;
    if let Some(s) = snapshot.as_mut() {
        let deltas: Vec<Vec<f64>> = s
            .iter_mut()
            .map(|c| if noise.sigma > 0.0 { perturb(c) } else { vec![0.0; c.len()] })
            .collect();
        snapshot_noise = Some(deltas);
    }

    let magnitude_of = |trs: &[Trace], snap: Option<&Vec<Vec<f64>>>, exact_snap: bool| -> Magnitudes {
        let tw = time.weights();
        let part = |k: usize| -> f64 {
            trs.iter()
                .filter(|t| t.k == k)
                .map(|t| {
                    let mut s = 0.0;
                    for n in 0..time.n {
                        for (ie, e) in gq.iter().enumerate() {
                            for c in 0..t.ncomp {
                                let v = t.values[(n * gq.len() + ie) * t.ncomp + c];
                                s += tw[n] * e.weight * v * v;
                            }
                        }
                    }
                    s.sqrt()
                })
                .sum()
        };
        let d = part(0);
        let snap_m = |m: usize| {
            snap.map(|s| if exact_snap { snap_norm(s, m) } else { sobolev_norm_sampled(s, grid, m) }).unwrap_or(0.0)
        };
        let d1 = (tier >= Tier::D1).then(|| d + part(1) + snap_m(3));
        let d2 = (tier >= Tier::D2).then(|| d + part(1) + part(2) + snap_m(4));
        Magnitudes { d, d1, d2 }
    };
    let magnitudes = if noise.sigma > 0.0 {
        magnitude_of(&traces, snapshot.as_ref(), false)
    } else {
        magnitude_of(&traces, snapshot.as_ref(), true)
    };
    let noise_magnitudes = magnitude_of(&noise_traces, snapshot_noise.as_ref(), false);

    // bounds from the full solution on ∂Ω × I and the end slices
    let bnd: Vec<f64> = slices.iter().map(|s| boundary_norms(s, &all, &time)).collect();
    let end_h1 = |k: usize| -> f64 {
        [0, time.n - 1]
            .iter()
            .map(|&n| {
                let s = &slices[k][n];
                let grads: Vec<Vec<f64>> = s
                    .grad_xt_rot
                    .chunks(dim + 1)
                    .flat_map(|c| c[..dim].to_vec())
                    .collect();
                h1_norm(grid, &s.rot, &grads)
            })
            .sum()
    };
    let rot_linf_h1 = (0..time.n)
        .map(|n| {
            let s = &slices[0][n];
            let grads: Vec<Vec<f64>> = s.grad_xt_rot.chunks(dim + 1).flat_map(|c| c[..dim].to_vec()).collect();
            h1_norm(grid, &s.rot, &grads)
        })
        .fold(0.0, f64::max);
    let bsum = |k: usize| bnd.iter().take(k + 1).sum::<f64>();
    let bounds = Bounds {
        m: bnd[0] + rot_linf_h1,
        m1: bsum(1.min(bnd.len() - 1)) + (0..=1.min(slices.len() - 1)).map(end_h1).sum::<f64>(),
        m2: bsum(2.min(bnd.len() - 1)) + (0..=2.min(slices.len() - 1)).map(end_h1).sum::<f64>(),
        m_source: source.map(|f| source_h2_norm(f, grid, t0)),
    };

    Ok(CauchyDataset {
        tier,
        dim,
        t0,
        time,
        grid: grid.clone(),
        gamma: domain.gamma.clone(),
        entries: gq,
        traces,
        snapshot,
        magnitudes,
        noise_magnitudes,
        bounds,
        noise,
        derivatives: derivatives.into(),
    })
}

fn snapshot_is(a: &[Vec<f64>], b: &[Vec<f64>]) -> bool {
    a == b
}

impl CauchyDataset {
    pub fn trace(&self, name: &str) -> Option<&Trace> {
        self.traces.iter().find(|t| t.name == name)
    }

    /// Value of component `c` of a trace at time node `n` and entry `e`.
    pub fn value(&self, trace: &Trace, n: usize, e: usize, c: usize) -> f64 {
        trace.values[(n * self.entries.len() + e) * trace.ncomp + c]
    }

    /// Writes one CSV per trace, the snapshot (if any) and `manifest.json`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let dim = self.dim;
        for tr in &self.traces {
            let mut w = csv::Writer::from_path(dir.join(format!("{}.csv", tr.name)))?;
            let mut header = vec!["t".to_string()];
            header.extend((0..dim).map(|a| format!("x{}", a + 1)));
            header.push("face".into());
            header.extend((0..tr.ncomp).map(|c| format!("c{c}")));
            w.write_record(&header)?;
            for n in 0..self.time.n {
                for (ie, e) in self.entries.iter().enumerate() {
                    let x = self.grid.coords(e.node);
                    let mut rec = vec![fmt(self.time.time(n))];
                    rec.extend(x[..dim].iter().map(|v| fmt(*v)));
                    rec.push(format!("{}{}", if e.face.upper { "+" } else { "-" }, e.face.axis));
                    rec.extend((0..tr.ncomp).map(|c| fmt(self.value(tr, n, ie, c))));
                    w.write_record(&rec)?;
                }
            }
            w.flush()?;
        }
        if let Some(s) = &self.snapshot {
            let mut w = csv::Writer::from_path(dir.join("snapshot_v_t0.csv"))?;
            let mut header: Vec<String> = (0..dim).map(|a| format!("x{}", a + 1)).collect();
            header.extend((0..s.len()).map(|c| format!("c{c}")));
            w.write_record(&header)?;
            for i in 0..self.grid.len() {
                let x = self.grid.coords(i);
                let mut rec: Vec<String> = x[..dim].iter().map(|v| fmt(*v)).collect();
                rec.extend(s.iter().map(|c| fmt(c[i])));
                w.write_record(&rec)?;
            }
            w.flush()?;
        }
        let manifest = serde_json::json!({
            "tier": self.tier,
            "noise": { "sigma": self.noise.sigma, "seed": self.noise.seed, "model": "additive gaussian relative to trace rms" },
            "magnitudes": self.magnitudes,
            "noise_magnitudes": self.noise_magnitudes,
            "bounds": self.bounds,
            "derivatives": self.derivatives,
            "t0": self.t0,
            "time": self.time,
            "traces": self.traces.iter().map(|t| &t.name).collect::<Vec<_>>(),
        });
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }
}

/// Shortest round-trip formatting.
pub(crate) fn fmt(v: f64) -> String {
    format!("{v:e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::funcs::{radial_bump, Time};
    use crate::geometry::domain::{build_domain, Preset, TimeSpec};

    fn domain() -> DomainSpec {
        build_domain(Preset::Rect2dRightEdge, 16, TimeSpec::default()).unwrap()
    }

    #[test]
    fn noise_free_is_deterministic_and_matches_quadrature() {
        let d = domain();
        let sol = ManufacturedSolution::taylor_green(std::f64::consts::PI);
        let a = generate_cauchy_data(VelocityInput::Analytic(&sol), &d, Tier::D1, NoiseSpec::none(), None).unwrap();
        let b = generate_cauchy_data(VelocityInput::Analytic(&sol), &d, Tier::D1, NoiseSpec::none(), None).unwrap();
        assert_eq!(a, b);
        // ‖v‖ on Γ × I by direct quadrature
        let tw = d.time.weights();
        let mut s = 0.0;
        for n in 0..d.time.n {
            for e in &a.entries {
                let v = sol.velocity_at(&d.grid.coords(e.node), d.time.time(n));
                s += tw[n] * e.weight * (v[0] * v[0] + v[1] * v[1]);
            }
        }
        let v = a.trace("v").unwrap();
        let mut q = 0.0;
        for n in 0..d.time.n {
            for (ie, e) in a.entries.iter().enumerate() {
                q += tw[n] * e.weight * (a.value(v, n, ie, 0).powi(2) + a.value(v, n, ie, 1).powi(2));
            }
        }
        assert!((s - q).abs() < 1e-14 * s.max(1.0));
        assert!(a.magnitudes.d > 0.0 && a.magnitudes.d1.unwrap() > a.magnitudes.d);
        assert_eq!(a.noise_magnitudes.d, 0.0);
    }

    #[test]
    fn noise_magnitude_is_linear_in_sigma() {
        let d = domain();
        let sol = ManufacturedSolution::taylor_green(std::f64::consts::PI);
        let hi = generate_cauchy_data(VelocityInput::Analytic(&sol), &d, Tier::D, NoiseSpec { sigma: 1e-3, seed: 5 }, None).unwrap();
        let lo = generate_cauchy_data(VelocityInput::Analytic(&sol), &d, Tier::D, NoiseSpec { sigma: 1e-4, seed: 5 }, None).unwrap();
        let r = hi.noise_magnitudes.d / lo.noise_magnitudes.d;
        assert!((r - 10.0).abs() < 1e-9, "{r}");
    }

    #[test]
    fn zero_solution_has_zero_magnitudes() {
        let d = domain();
        let sol = ManufacturedSolution::zero(2).unwrap();
        let a = generate_cauchy_data(VelocityInput::Analytic(&sol), &d, Tier::D2, NoiseSpec { sigma: 0.1, seed: 1 }, None).unwrap();
        assert_eq!(a.magnitudes.d, 0.0);
        assert_eq!(a.bounds.m, 0.0);
        assert_eq!(a.magnitudes.d2, Some(0.0));
    }

    #[test]
    fn obstruction_data_equals_zero_data() {
        let d = domain();
        let psi = StField::term(1.0, radial_bump([0.5, 0.5, 0.0], 0.3, 4, 2), Time::constant());
        let ob = ManufacturedSolution::obstruction(psi, 2).unwrap();
        let z = ManufacturedSolution::zero(2).unwrap();
        let a = generate_cauchy_data(VelocityInput::Analytic(&ob), &d, Tier::D2, NoiseSpec::none(), None).unwrap();
        let b = generate_cauchy_data(VelocityInput::Analytic(&z), &d, Tier::D2, NoiseSpec::none(), None).unwrap();
        assert_eq!(a.traces, b.traces);
        assert_eq!(a.snapshot, b.snapshot);
    }

    #[test]
    fn sampled_input_agrees_with_analytic() {
        let d = build_domain(Preset::Rect2dRightEdge, 32, TimeSpec { intervals: 32, ..TimeSpec::default() }).unwrap();
        let sol = ManufacturedSolution::taylor_green(std::f64::consts::PI);
        let field = SpaceTime::from_fn(d.time, |t| sol.sample_velocity(&d.grid, t));
        let a = generate_cauchy_data(VelocityInput::Analytic(&sol), &d, Tier::D1, NoiseSpec::none(), None).unwrap();
        let s = generate_cauchy_data(VelocityInput::Sampled(&field), &d, Tier::D1, NoiseSpec::none(), None).unwrap();
        let rel = (a.magnitudes.d - s.magnitudes.d).abs() / a.magnitudes.d;
        assert!(rel < 2e-2, "{rel}");
        assert_eq!(s.derivatives, "stencil");
        let short = SpaceTime::from_fn(TimeAxis::symmetric(0.5, 0.1, 2), |t| sol.sample_velocity(&d.grid, t));
        let dd = DomainSpec { time: short.time, ..d.clone() };
        let err = generate_cauchy_data(VelocityInput::Sampled(&short), &dd, Tier::D2, NoiseSpec::none(), None);
        assert!(matches!(err, Err(Error::TierUnavailable { .. })));
    }

    #[test]
    fn writes_directory() {
        let d = domain();
        let sol = ManufacturedSolution::taylor_green(std::f64::consts::PI);
        let a = generate_cauchy_data(VelocityInput::Analytic(&sol), &d, Tier::D1, NoiseSpec { sigma: 1e-3, seed: 2 }, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        a.write_dir(dir.path()).unwrap();
        assert!(dir.path().join("dt_grad_xt_rot_v.csv").exists());
        let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(m["noise"]["seed"], 2);
    }
}
