//! Carleman-weighted quasi-reversibility for the vorticity/velocity decomposition in 2D.
//!
//! Unknowns are `(v₁, v₂, z)` on every node and time slice of Q = Ω × I, plus the spatial
//! parameters of the source when it is unknown.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::field::{ScalarField, SpaceTime, VectorField};
use crate::fields::grid::Grid;
use crate::fields::ops;
use crate::forward::dataset::{CauchyDataset, Tier};
use crate::forward::solution::CoefficientFields;
use crate::geometry::domain::DomainSpec;
use crate::geometry::weight::WeightFunction;
use crate::linalg::{cgnr, lstsq_qr, norm, normal_equations_solve, CsrMatrix, SolveStats};
use crate::reconstruction::stencil::{self, Stencil};

/// Default largest admitted `s (max φ − min φ)`.
pub const MAX_WEIGHT_EXPONENT: f64 = 16.0;

/// What is known about rot F on Q.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceUnknown {
    /// rot F sampled as `[slice][node]`.
    Known(Vec<Vec<f64>>),
    /// rot F = r(t) g(x) with r given per slice and g unknown per node.
    Separated { r: Vec<f64> },
    /// F = R(x,t) f(x) with R given as `[slice][node]` and f unknown per node.
    Matrix { r: Vec<Vec<[[f64; 2]; 2]>> },
}

impl SourceUnknown {
    pub fn zero(nt: usize, nodes: usize) -> Self {
        SourceUnknown::Known(vec![vec![0.0; nodes]; nt])
    }

    fn unknowns_per_node(&self) -> usize {
        match self {
            SourceUnknown::Known(_) => 0,
            SourceUnknown::Separated { .. } => 1,
            SourceUnknown::Matrix { .. } => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Qr,
    NormalCholesky,
    Cgnr,
}

/// Options of one quasi-reversibility solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QrOptions {
    pub s: f64,
    pub alpha: f64,
    pub gamma_b: f64,
    /// Use the snapshot v(·,t₀) of tiers D₁/D₂.
    pub use_snapshot: bool,
    /// Use the first time-derivative traces of tiers D₁/D₂.
    pub use_dt_traces: bool,
    pub backend: Backend,
    /// s is clamped so that `s (max φ − min φ)` stays below this.
    pub max_exponent: f64,
    /// Multiplies the z − rot v rows.
    pub consistency_weight: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for QrOptions {
    fn default() -> Self {
        Self {
            s: 1.0,
            alpha: 1e-8,
            gamma_b: 1.0,
            use_snapshot: false,
            use_dt_traces: false,
            backend: Backend::NormalCholesky,
            max_exponent: MAX_WEIGHT_EXPONENT,
            consistency_weight: 1.0,
            tol: 1e-8,
            max_iter: 20_000,
        }
    }
}

pub struct QrProblem<'a> {
    pub domain: &'a DomainSpec,
    pub weight: &'a WeightFunction,
    pub dataset: &'a CauchyDataset,
    pub coeffs: &'a CoefficientFields,
    pub source: SourceUnknown,
    pub options: QrOptions,
}

/// Assembled least-squares system `‖A x − b‖²`.
pub struct QrSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub nodes: usize,
    pub slices: usize,
    pub source_unknowns: usize,
    /// s actually used after clamping.
    pub s_used: f64,
    pub row_blocks: Vec<(String, usize)>,
}

impl QrSystem {
    fn var(&self, k: usize, n: usize, c: usize) -> usize {
        (k * self.nodes + n) * 3 + c
    }
}

/// Coefficient values at one node and time.
#[derive(Default, Clone, Copy)]
struct Coeffs {
    a: [f64; 2],
    /// ∂ᵢAⱼ as `da[i][j]`.
    da: [[f64; 2]; 2],
    /// ∂ⱼBᵢ as `db[i][j]`.
    db: [[f64; 2]; 2],
    /// ∂ₗ∂ⱼBᵢ as `ddb[i][j][l]`.
    ddb: [[[f64; 2]; 2]; 2],
}

fn sample_coeffs(c: &CoefficientFields, x: &[f64; 3], t: f64) -> Coeffs {
    let mut out = Coeffs::default();
    if c.is_zero() {
        return out;
    }
    for j in 0..2 {
        out.a[j] = c.a[j].eval(x, t);
        for i in 0..2 {
            out.da[i][j] = c.a[j].dx(i).eval(x, t);
            let bij = c.b[i].dx(j);
            out.db[i][j] = bij.eval(x, t);
            for l in 0..2 {
                out.ddb[i][j][l] = bij.dx(l).eval(x, t);
            }
        }
    }
    out
}

/// The s that [`assemble_qr_system`] uses for a requested s.
pub fn clamp_s(s: f64, max_exponent: f64, domain: &DomainSpec, weight: &WeightFunction) -> f64 {
    let (lo, hi) = phi_range(domain, weight);
    if hi > lo {
        s.min(max_exponent / (hi - lo))
    } else {
        s
    }
}

pub fn phi_range(domain: &DomainSpec, weight: &WeightFunction) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in 0..domain.time.n {
        for p in weight.phi_on(&domain.grid, domain.time.time(k)) {
            lo = lo.min(p);
            hi = hi.max(p);
        }
    }
    (lo, hi)
}

struct Builder {
    trip: Vec<(usize, usize, f64)>,
    rhs: Vec<f64>,
}

impl Builder {
    fn row(&mut self, entries: impl IntoIterator<Item = (usize, f64)>, b: f64, scale: f64) {
        let r = self.rhs.len();
        for (c, v) in entries {
            if v != 0.0 {
                self.trip.push((r, c, scale * v));
            }
        }
        self.rhs.push(scale * b);
    }
}

fn lift<'a>(st: &'a Stencil, f: impl Fn(usize) -> usize + 'a, coef: f64) -> impl Iterator<Item = (usize, f64)> + 'a {
    st.iter().map(move |&(i, c)| (f(i), coef * c))
}

/// Stacks the weighted equation rows, the Γ mismatch rows, the snapshot rows and the Tikhonov block.
pub fn assemble_qr_system(problem: &QrProblem) -> Result<QrSystem> {
    let domain = problem.domain;
    let data = problem.dataset;
    let o = &problem.options;
    if domain.dim() != 2 {
        return Err(Error::InvalidArgument("the quasi-reversibility solver is implemented in 2D".into()));
    }
    if !(o.s > 0.0 && o.alpha >= 0.0 && o.gamma_b > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need s > 0, alpha >= 0, gamma_b > 0, got s={}, alpha={}, gamma_b={}",
            o.s, o.alpha, o.gamma_b
        )));
    }
    if data.grid != domain.grid || data.time != domain.time {
        return Err(Error::ShapeMismatch("dataset does not live on the domain grid and time axis".into()));
    }
    if (o.use_snapshot || o.use_dt_traces) && data.tier < Tier::D1 {
        return Err(Error::TierUnavailable {
            requested: "D1".into(),
            reason: format!("dataset has tier {:?}", data.tier),
        });
    }
    let grid = &domain.grid;
    let time = domain.time;
    let (nn, nt) = (grid.len(), time.n);
    let src_per = problem.source.unknowns_per_node();
    let offset = 3 * nn * nt;
    let ncols = offset + src_per * nn;
    let s = clamp_s(o.s, o.max_exponent, domain, problem.weight);
    let (_, phi_max) = phi_range(domain, problem.weight);
    let wq = grid.trapezoid_weights();
    let tw = time.weights();
    let var = |k: usize, n: usize, c: usize| (k * nn + n) * 3 + c;
    let mut b = Builder { trip: Vec::new(), rhs: Vec::new() };
    let mut blocks = Vec::new();

    match &problem.source {
        SourceUnknown::Known(r) if r.len() != nt || r.iter().any(|x| x.len() != nn) => {
            return Err(Error::ShapeMismatch("known rot F must be sampled on every slice and node".into()));
        }
        SourceUnknown::Separated { r } if r.len() != nt => {
            return Err(Error::ShapeMismatch("r(t) must be sampled on every slice".into()));
        }
        SourceUnknown::Matrix { r } if r.len() != nt || r.iter().any(|x| x.len() != nn) => {
            return Err(Error::ShapeMismatch("R(x,t) must be sampled on every slice and node".into()));
        }
        _ => {}
    }

    // (i) parabolic, (ii) elliptic, (iii) divergence, z − rot v
    let mut count = [0usize; 4];
    for k in 0..nt {
        let t = time.time(k);
        let phi = problem.weight.phi_on(grid, t);
        let tst = stencil::dt(nt, time.dt, k);
        for n in 0..nn {
            let x = grid.coords(n);
            let scale = (wq[n] * tw[k]).sqrt() * (s * (phi[n] - phi_max)).exp();
            let d = [stencil::d1(grid, n, 0), stencil::d1(grid, n, 1)];
            let lap = stencil::laplacian(grid, n);
            let c = sample_coeffs(problem.coeffs, &x, t);

            let mut row: Vec<(usize, f64)> = Vec::new();
            row.extend(tst.iter().map(|&(kk, w)| (var(kk, n, 2), w)));
            row.extend(lift(&lap, |m| var(k, m, 2), -1.0));
            for j in 0..2 {
                // (A·∇)z
                row.extend(lift(&d[j], |m| var(k, m, 2), c.a[j]));
                // (∂₁Aⱼ)∂ⱼv₂ − (∂₂Aⱼ)∂ⱼv₁
                row.extend(lift(&d[j], |m| var(k, m, 1), c.da[0][j]));
                row.extend(lift(&d[j], |m| var(k, m, 0), -c.da[1][j]));
                // (∂₁vⱼ)∂ⱼB₂ − (∂₂vⱼ)∂ⱼB₁
                row.extend(lift(&d[0], |m| var(k, m, j), c.db[1][j]));
                row.extend(lift(&d[1], |m| var(k, m, j), -c.db[0][j]));
                // vⱼ∂₁∂ⱼB₂ − vⱼ∂₂∂ⱼB₁
                row.push((var(k, n, j), c.ddb[1][j][0] - c.ddb[0][j][1]));
            }
            let mut rhs = 0.0;
            match &problem.source {
                SourceUnknown::Known(r) => rhs = r[k][n],
                SourceUnknown::Separated { r } => row.push((offset + n, -r[k])),
                SourceUnknown::Matrix { r } => {
                    // rot(R f) = ∂₁(R₂ⱼfⱼ) − ∂₂(R₁ⱼfⱼ)
                    for j in 0..2 {
                        row.extend(d[0].iter().map(|&(m, w)| (offset + 2 * m + j, -w * r[k][m][1][j])));
                        row.extend(d[1].iter().map(|&(m, w)| (offset + 2 * m + j, w * r[k][m][0][j])));
                    }
                }
            }
            b.row(row, rhs, scale);
            count[0] += 1;

            // Δv + (∂₂z, −∂₁z) = 0
            let e1: Vec<_> = lift(&lap, |m| var(k, m, 0), 1.0).chain(lift(&d[1], |m| var(k, m, 2), 1.0)).collect();
            b.row(e1, 0.0, scale);
            let e2: Vec<_> = lift(&lap, |m| var(k, m, 1), 1.0).chain(lift(&d[0], |m| var(k, m, 2), -1.0)).collect();
            b.row(e2, 0.0, scale);
            count[1] += 2;

            let dv: Vec<_> = lift(&d[0], |m| var(k, m, 0), 1.0).chain(lift(&d[1], |m| var(k, m, 1), 1.0)).collect();
            b.row(dv, 0.0, scale);
            count[2] += 1;

            let zr: Vec<_> = std::iter::once((var(k, n, 2), 1.0))
                .chain(lift(&d[0], |m| var(k, m, 1), -1.0))
                .chain(lift(&d[1], |m| var(k, m, 0), 1.0))
                .collect();
            b.row(zr, 0.0, scale * o.consistency_weight);
            count[3] += 1;
        }
    }
    blocks.push(("parabolic".to_string(), count[0]));
    blocks.push(("elliptic".to_string(), count[1]));
    blocks.push(("divergence".to_string(), count[2]));
    blocks.push(("vorticity_consistency".to_string(), count[3]));

    // (iv) Γ mismatch
    let trace = |name: &str| {
        data.trace(name).ok_or_else(|| Error::TierUnavailable {
            requested: name.into(),
            reason: format!("trace missing from a tier {:?} dataset", data.tier),
        })
    };
    let tv = trace("v")?;
    let tg = trace("grad_v")?;
    let tz = trace("rot_v")?;
    let tgz = trace("grad_xt_rot_v")?;
    let dt_traces = if o.use_dt_traces { Some((trace("dt_v")?, trace("dt_rot_v")?)) } else { None };
    let mut nb = 0;
    for k in 0..nt {
        let tst = stencil::dt(nt, time.dt, k);
        for (e, entry) in data.entries.iter().enumerate() {
            let n = entry.node;
            let scale = (o.gamma_b * entry.weight * tw[k]).sqrt();
            let d = [stencil::d1(grid, n, 0), stencil::d1(grid, n, 1)];
            for c in 0..2 {
                b.row([(var(k, n, c), 1.0)], data.value(tv, k, e, c), scale);
                for j in 0..2 {
                    b.row(lift(&d[j], |m| var(k, m, c), 1.0).collect::<Vec<_>>(), data.value(tg, k, e, c * 2 + j), scale);
                }
            }
            b.row([(var(k, n, 2), 1.0)], data.value(tz, k, e, 0), scale);
            for j in 0..2 {
                b.row(lift(&d[j], |m| var(k, m, 2), 1.0).collect::<Vec<_>>(), data.value(tgz, k, e, j), scale);
            }
            b.row(tst.iter().map(|&(kk, w)| (var(kk, n, 2), w)).collect::<Vec<_>>(), data.value(tgz, k, e, 2), scale);
            nb += 10;
            if let Some((tdv, tdz)) = dt_traces {
                for c in 0..2 {
                    b.row(tst.iter().map(|&(kk, w)| (var(kk, n, c), w)).collect::<Vec<_>>(), data.value(tdv, k, e, c), scale);
                }
                b.row(tst.iter().map(|&(kk, w)| (var(kk, n, 2), w)).collect::<Vec<_>>(), data.value(tdz, k, e, 0), scale);
                nb += 3;
            }
        }
    }
    blocks.push(("gamma_mismatch".to_string(), nb));

    if o.use_snapshot {
        let snap = data.snapshot.as_ref().ok_or_else(|| Error::TierUnavailable {
            requested: "snapshot".into(),
            reason: "dataset carries no v(t0) snapshot".into(),
        })?;
        let k0 = time.index_of(domain.t0).ok_or_else(|| Error::InvalidArgument("t0 is not a time node".into()))?;
        for n in 0..nn {
            let scale = (o.gamma_b * wq[n]).sqrt();
            for c in 0..2 {
                b.row([(var(k0, n, c), 1.0)], snap[c][n], scale);
            }
        }
        blocks.push(("snapshot".to_string(), 2 * nn));
    }

    if o.alpha > 0.0 {
        for k in 0..nt {
            for n in 0..nn {
                let scale = (o.alpha * wq[n] * tw[k]).sqrt();
                for c in 0..3 {
                    b.row([(var(k, n, c), 1.0)], 0.0, scale);
                }
            }
        }
        for n in 0..nn {
            for j in 0..src_per {
                b.row([(offset + src_per * n + j, 1.0)], 0.0, (o.alpha * wq[n]).sqrt());
            }
        }
        blocks.push(("tikhonov".to_string(), ncols));
    }

    let nrows = b.rhs.len();
    Ok(QrSystem {
        matrix: CsrMatrix::from_triplets(nrows, ncols, b.trip),
        rhs: b.rhs,
        nodes: nn,
        slices: nt,
        source_unknowns: src_per * nn,
        s_used: s,
        row_blocks: blocks,
    })
}

/// Continuation error functional and its parts, all squared norms over Ω₀ × window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuationError {
    pub eps_tilde: f64,
    /// Σ_ℓ ‖rot^ℓ(v − v_true)‖²_{H^{1,1}}.
    pub h11: f64,
    /// Σ_ℓ ‖Δ rot^ℓ(v − v_true)‖²_{L²}.
    pub laplacian: f64,
    pub total: f64,
    /// Same H^{1,1} part for the truth alone.
    pub truth_h11: f64,
    /// sqrt(h11 / truth_h11).
    pub relative_h11: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconstructionResult {
    #[serde(skip)]
    pub v: SpaceTime<VectorField>,
    #[serde(skip)]
    pub z: SpaceTime<ScalarField>,
    #[serde(skip)]
    pub source_params: Vec<f64>,
    pub s_requested: f64,
    pub s_used: f64,
    pub residual_norm: f64,
    pub relative_residual: f64,
    pub stats: SolveStats,
    pub unknowns: usize,
    pub rows: usize,
    pub row_blocks: Vec<(String, usize)>,
    pub error: Option<ContinuationError>,
}

/// Solves the assembled system; a non-converged iterative solve is reported through `stats`.
pub fn solve_qr(problem: &QrProblem, system: &QrSystem) -> Result<ReconstructionResult> {
    let o = &problem.options;
    let a = &system.matrix;
    let bnorm = norm(&system.rhs);
    let (x, mut stats) = if bnorm == 0.0 {
        (vec![0.0; a.ncols], SolveStats { method: "trivial".into(), iterations: 0, relative_residual: 0.0, converged: true })
    } else {
        match o.backend {
            Backend::Qr => {
                let x = lstsq_qr(a, &system.rhs)?;
                (x, SolveStats { method: "sparse_qr".into(), iterations: 1, relative_residual: 0.0, converged: true })
            }
            Backend::NormalCholesky => normal_equations_solve(a, &system.rhs, 0.0, o.tol, 10)?,
            Backend::Cgnr => cgnr(a, &system.rhs, 0.0, o.tol, o.max_iter),
        }
    };
    let ax = a.matvec(&x);
    let res: Vec<f64> = ax.iter().zip(&system.rhs).map(|(p, q)| p - q).collect();
    let residual_norm = norm(&res);
    let relative_residual = if bnorm > 0.0 { residual_norm / bnorm } else { 0.0 };
    if stats.method == "sparse_qr" {
        // optimality of the least-squares solution: ‖Aᵀr‖ relative to ‖Aᵀb‖
        let atb = norm(&a.matvec_t(&system.rhs));
        stats.relative_residual = if atb > 0.0 { norm(&a.matvec_t(&res)) / atb } else { 0.0 };
        stats.converged = stats.relative_residual <= o.tol.max(1e-8);
    }
    let grid = &problem.domain.grid;
    let time = problem.domain.time;
    let (v, z) = unpack(&x, system, grid, time);
    Ok(ReconstructionResult {
        v,
        z,
        source_params: x[3 * system.nodes * system.slices..].to_vec(),
        s_requested: o.s,
        s_used: system.s_used,
        residual_norm,
        relative_residual,
        stats,
        unknowns: a.ncols,
        rows: a.nrows,
        row_blocks: system.row_blocks.clone(),
        error: None,
    })
}

fn unpack(
    x: &[f64],
    system: &QrSystem,
    grid: &Grid,
    time: crate::fields::grid::TimeAxis,
) -> (SpaceTime<VectorField>, SpaceTime<ScalarField>) {
    let nn = system.nodes;
    let mut vs = Vec::with_capacity(system.slices);
    let mut zs = Vec::with_capacity(system.slices);
    for k in 0..system.slices {
        let comp = |c: usize| (0..nn).map(|n| x[system.var(k, n, c)]).collect::<Vec<_>>();
        vs.push(VectorField { grid: grid.clone(), comps: vec![comp(0), comp(1)] });
        zs.push(ScalarField { grid: grid.clone(), values: comp(2) });
    }
    (SpaceTime { time, slices: vs }, SpaceTime { time, slices: zs })
}

/// Assembles and solves.
pub fn reconstruct(problem: &QrProblem) -> Result<ReconstructionResult> {
    let system = assemble_qr_system(problem)?;
    solve_qr(problem, &system)
}

/// Squared H^{1,1} and Laplacian parts of N for `u` (ℓ = 0) and its rot (ℓ = 1) over Ω₀ × window.
fn n_parts(u: &SpaceTime<VectorField>, domain: &DomainSpec, window: &[usize]) -> Result<(f64, f64)> {
    let grid = &domain.grid;
    let mask = &domain.inner_mask;
    let cell = grid.cell_volume() * domain.time.dt;
    let rot = SpaceTime {
        time: u.time,
        slices: u.slices.iter().map(ops::curl).collect::<Result<Vec<_>>>()?,
    };
    let mut h11 = 0.0;
    let mut lap = 0.0;
    for f in [u, &rot] {
        let ft = ops::time_derivative_vec(f)?;
        for &k in window {
            for (c, vals) in f.slices[k].comps.iter().enumerate() {
                let parts: Vec<Vec<f64>> = vec![
                    vals.clone(),
                    ops::d1(grid, vals, 0),
                    ops::d1(grid, vals, 1),
                    ft.slices[k].comps[c].clone(),
                ];
                let lp: Vec<f64> = ops::d2(grid, vals, 0).iter().zip(ops::d2(grid, vals, 1)).map(|(a, b)| a + b).collect();
                for n in (0..grid.len()).filter(|&n| mask[n]) {
                    h11 += cell * parts.iter().map(|p| p[n] * p[n]).sum::<f64>();
                    lap += cell * lp[n] * lp[n];
                }
            }
        }
    }
    Ok((h11, lap))
}

/// N(v − v_true; t₀ − ε̃, t₀ + ε̃) over Ω₀, discretized with the same stencils for both fields.
pub fn continuation_error(
    v: &SpaceTime<VectorField>,
    truth: &SpaceTime<VectorField>,
    domain: &DomainSpec,
    eps_tilde: f64,
) -> Result<ContinuationError> {
    let window = domain.time_window(eps_tilde);
    if window.is_empty() {
        return Err(Error::InvalidArgument(format!("no time node within eps_tilde = {eps_tilde} of t0")));
    }
    let diff = SpaceTime {
        time: v.time,
        slices: v.slices.iter().zip(&truth.slices).map(|(a, b)| a - b).collect(),
    };
    let (h11, laplacian) = n_parts(&diff, domain, &window)?;
    let (truth_h11, _) = n_parts(truth, domain, &window)?;
    let relative_h11 = if truth_h11 > 0.0 { (h11 / truth_h11).sqrt() } else { h11.sqrt() };
    Ok(ContinuationError { eps_tilde, h11, laplacian, total: h11 + laplacian, truth_h11, relative_h11 })
}
