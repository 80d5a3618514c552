//! Source recovery at t₀ from a reconstructed velocity: rot F = rot ∂ₜv + a, then F from
//! −ΔF = rot rot F when div F(t₀) = 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::field::{ScalarField, SpaceTime, VectorField};
use crate::fields::grid::{Face, Grid};
use crate::fields::ops;
use crate::forward::dataset::{generate_cauchy_data, CauchyDataset, NoiseSpec, Tier, VelocityInput};
use crate::forward::expr::Smooth;
use crate::forward::solution::{CoefficientFields, ManufacturedSolution};
use crate::forward::source::{SourceModel, SourceSpec};
use crate::geometry::domain::DomainSpec;
use crate::geometry::weight::WeightFunction;
use crate::linalg::{cholesky_solve, normal_equations_solve, CsrMatrix};
use crate::reconstruction::qr::{reconstruct, QrOptions, QrProblem, SourceUnknown};
use crate::reconstruction::stencil;

/// Second-order central difference of `v` in time at `t0`.
pub fn estimate_dtv_at_t0(v: &SpaceTime<VectorField>, t0: f64) -> Result<VectorField> {
    let k = v.time.index_of(t0).ok_or_else(|| Error::InvalidArgument(format!("t0 = {t0} is not a time node")))?;
    ops::central_time_difference(v, k)
}

/// a = rot(−Δv + (A·∇)v + (v·∇)B) at time `t0`, 2D. The Laplacian part is taken as −Δz with
/// z = rot v, from `z0` when given and from the discrete curl of `v0` otherwise.
pub fn assemble_a(v0: &VectorField, z0: Option<&[f64]>, coeffs: &CoefficientFields, t0: f64) -> Result<Vec<f64>> {
    let grid = &v0.grid;
    if grid.dim() != 2 || v0.ncomp() != 2 {
        return Err(Error::ShapeMismatch("assemble_a needs a 2D velocity".into()));
    }
    let z = match z0 {
        Some(z) if z.len() == grid.len() => z.to_vec(),
        Some(_) => return Err(Error::ShapeMismatch("z and v live on different grids".into())),
        None => ops::curl2(v0)?.values,
    };
    let mut a: Vec<f64> = ops::d2(grid, &z, 0).iter().zip(ops::d2(grid, &z, 1)).map(|(p, q)| -(p + q)).collect();
    if !coeffs.is_zero() {
        let grads: Vec<[Vec<f64>; 2]> = v0.comps.iter().map(|c| [ops::d1(grid, c, 0), ops::d1(grid, c, 1)]).collect();
        let mut w = vec![vec![0.0; grid.len()]; 2];
        for n in 0..grid.len() {
            let x = grid.coords(n);
            for i in 0..2 {
                for j in 0..2 {
                    // (A·∇)vᵢ + (v·∇)Bᵢ
                    w[i][n] += coeffs.a[j].eval(&x, t0) * grads[i][j][n] + v0.comps[j][n] * coeffs.b[i].dx(j).eval(&x, t0);
                }
            }
        }
        let r = ops::curl2(&VectorField { grid: grid.clone(), comps: w })?;
        for (ai, ri) in a.iter_mut().zip(&r.values) {
            *ai += ri;
        }
    }
    Ok(a)
}

/// rot ∂ₜv at `t0` as the central time difference of z = rot v.
pub fn rot_dtv_at_t0(z: &SpaceTime<ScalarField>, t0: f64) -> Result<Vec<f64>> {
    let k = z.time.index_of(t0).ok_or_else(|| Error::InvalidArgument(format!("t0 = {t0} is not a time node")))?;
    if k == 0 || k + 1 >= z.time.n {
        return Err(Error::InvalidArgument("t0 must lie strictly inside the time axis".into()));
    }
    let c = 0.5 / z.time.dt;
    Ok(z.slices[k + 1].values.iter().zip(&z.slices[k - 1].values).map(|(p, q)| c * (p - q)).collect())
}

/// rot F(·,t₀) = rot ∂ₜv(·,t₀) + a.
pub fn recover_rot_f(rot_dtv: &[f64], a: &[f64]) -> Result<Vec<f64>> {
    if rot_dtv.len() != a.len() {
        return Err(Error::ShapeMismatch("a and rot ∂ₜv live on different grids".into()));
    }
    Ok(rot_dtv.iter().zip(a).map(|(x, y)| x + y).collect())
}

/// Boundary treatment of the Poisson step.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PoissonBoundary {
    /// F = 0 on ∂Ω.
    Dirichlet,
    /// F = ∂ₙF = 0 on Γ only; on ∂Ω∖Γ the least-squares problem is closed by `alpha`‖F‖².
    GammaOnly { gamma: Vec<Face>, alpha: f64 },
}

/// Solves −ΔF = (∂₂ω, −∂₁ω) with ω = rot F(·,t₀).
pub fn recover_f_part2(rot_f: &[f64], grid: &Grid, boundary: &PoissonBoundary) -> Result<VectorField> {
    if grid.dim() != 2 || rot_f.len() != grid.len() {
        return Err(Error::ShapeMismatch("recover_f_part2 needs rot F on a 2D grid".into()));
    }
    let omega = ScalarField { grid: grid.clone(), values: rot_f.to_vec() };
    let rhs = ops::rot_scalar(&omega)?;
    let comps = rhs.comps.iter().map(|b| solve_poisson(b, grid, boundary)).collect::<Result<Vec<_>>>()?;
    Ok(VectorField { grid: grid.clone(), comps })
}

fn solve_poisson(rhs: &[f64], grid: &Grid, boundary: &PoissonBoundary) -> Result<Vec<f64>> {
    let nn = grid.len();
    match boundary {
        PoissonBoundary::Dirichlet => {
            let interior: Vec<usize> = (0..nn).filter(|&n| !grid.is_boundary(n)).collect();
            let mut pos = vec![usize::MAX; nn];
            for (i, &n) in interior.iter().enumerate() {
                pos[n] = i;
            }
            let mut trip = Vec::new();
            for (i, &n) in interior.iter().enumerate() {
                for (m, c) in stencil::laplacian(grid, n) {
                    if pos[m] != usize::MAX {
                        trip.push((i, pos[m], -c));
                    }
                }
            }
            let a = CsrMatrix::from_triplets(interior.len(), interior.len(), trip);
            let b: Vec<f64> = interior.iter().map(|&n| rhs[n]).collect();
            let x = cholesky_solve(&a, &b)?;
            let mut out = vec![0.0; nn];
            for (i, &n) in interior.iter().enumerate() {
                out[n] = x[i];
            }
            Ok(out)
        }
        PoissonBoundary::GammaOnly { gamma, alpha } => {
            if !(*alpha > 0.0) {
                return Err(Error::InvalidArgument("the extension weight must be positive".into()));
            }
            let h2 = grid.cell_volume();
            let mut trip = Vec::new();
            let mut b = Vec::new();
            let mut push = |row: Vec<(usize, f64)>, val: f64, scale: f64, trip: &mut Vec<(usize, usize, f64)>| {
                let r = b.len();
                trip.extend(row.into_iter().map(|(c, v)| (r, c, scale * v)));
                b.push(scale * val);
            };
            for n in 0..nn {
                let on_gamma: Vec<Face> = gamma.iter().copied().filter(|f| grid.on_face(n, *f)).collect();
                if !grid.is_boundary(n) {
                    let row = stencil::laplacian(grid, n).into_iter().map(|(m, c)| (m, -c)).collect();
                    push(row, rhs[n], h2.sqrt(), &mut trip);
                } else if !on_gamma.is_empty() {
                    // scaled like the interior rows so that both are O(1) per node
                    let s = 1.0 / h2.sqrt();
                    push(vec![(n, 1.0)], 0.0, s, &mut trip);
                    for f in on_gamma {
                        push(stencil::d1(grid, n, f.axis), 0.0, s * grid.spacing[f.axis], &mut trip);
                    }
                } else {
                    push(vec![(n, 1.0)], 0.0, (alpha * h2).sqrt(), &mut trip);
                }
            }
            let a = CsrMatrix::from_triplets(b.len(), nn, trip);
            let (x, stats) = normal_equations_solve(&a, &b, 0.0, 1e-12, 10)?;
            if stats.relative_residual > 1e-8 {
                return Err(Error::NoConvergence { iterations: stats.iterations, residual: stats.relative_residual });
            }
            Ok(x)
        }
    }
}

/// Error measures on Ω₀ = `mask`.
fn l2_on(grid: &Grid, mask: &[bool], f: &[f64]) -> f64 {
    let w = grid.trapezoid_weights();
    (0..grid.len()).filter(|&n| mask[n]).map(|n| w[n] * f[n] * f[n]).sum::<f64>().sqrt()
}

fn h1_on(grid: &Grid, mask: &[bool], comps: &[Vec<f64>]) -> f64 {
    let mut s = 0.0;
    for c in comps {
        s += l2_on(grid, mask, c).powi(2);
        for a in 0..grid.dim() {
            s += l2_on(grid, mask, &ops::d1(grid, c, a)).powi(2);
        }
    }
    s.sqrt()
}

/// Relative L²(Ω₀) error of a scalar against a truth.
pub fn relative_l2(grid: &Grid, mask: &[bool], est: &[f64], truth: &[f64]) -> f64 {
    let d: Vec<f64> = est.iter().zip(truth).map(|(a, b)| a - b).collect();
    let t = l2_on(grid, mask, truth);
    if t > 0.0 { l2_on(grid, mask, &d) / t } else { l2_on(grid, mask, &d) }
}

/// Relative H¹(Ω₀) error of a vector field against a truth.
pub fn relative_h1(grid: &Grid, mask: &[bool], est: &VectorField, truth: &VectorField) -> f64 {
    let d: Vec<Vec<f64>> = est.comps.iter().zip(&truth.comps).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect()).collect();
    let t = h1_on(grid, mask, &truth.comps);
    if t > 0.0 { h1_on(grid, mask, &d) / t } else { h1_on(grid, mask, &d) }
}

/// Where v(·,t₀) in a(x) comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AFrom {
    Reconstruction,
    Snapshot,
}

#[derive(Debug, Clone, Serialize)]
pub struct SourceRecovery {
    #[serde(skip)]
    pub rot_f: Vec<f64>,
    #[serde(skip)]
    pub a: Vec<f64>,
    #[serde(skip)]
    pub dtv: Option<VectorField>,
    #[serde(skip)]
    pub f: Option<VectorField>,
    /// ‖rot F(t₀)‖ over Ω₀, absolute.
    pub rot_f_norm: f64,
    pub rot_f_error: Option<f64>,
    /// rot F(t₀) read off the source unknowns of the solve, when the family parametrizes it.
    pub rot_f_direct_error: Option<f64>,
    pub f_error_h1: Option<f64>,
    pub d_noise: f64,
    pub s_used: f64,
    pub converged: bool,
    pub relative_residual: f64,
}

/// An inverse-source run: source model, the velocity it drives and solver settings.
pub struct SourcePipeline<'a> {
    pub domain: &'a DomainSpec,
    pub weight: &'a WeightFunction,
    pub model: &'a SourceModel,
    pub solution: &'a ManufacturedSolution,
    pub tier: Tier,
    pub options: QrOptions,
    pub a_from: AFrom,
    /// `None` stops after rot F.
    pub boundary: Option<PoissonBoundary>,
}

/// The source unknown matching the family of `model`: r(t) g(x) for separated sources, R f for
/// matrix sources and a time-independent rot F profile otherwise.
pub fn source_unknown(model: &SourceModel, domain: &DomainSpec) -> SourceUnknown {
    let time = domain.time;
    let grid = &domain.grid;
    if let Some(r) = model.separated_r() {
        return SourceUnknown::Separated { r: (0..time.n).map(|k| r.eval(time.time(k))).collect() };
    }
    if matches!(model.spec, SourceSpec::Matrix { .. } | SourceSpec::RadialMatrix { .. } | SourceSpec::DecayingBump { .. }) {
        let r = (0..time.n)
            .map(|k| {
                (0..grid.len())
                    .map(|n| {
                        let m = model.matrix_at(&grid.coords(n), time.time(k)).unwrap_or_default();
                        [[m[0][0], m[0][1]], [m[1][0], m[1][1]]]
                    })
                    .collect()
            })
            .collect();
        return SourceUnknown::Matrix { r };
    }
    SourceUnknown::Separated { r: vec![1.0; time.n] }
}

fn direct_rot_f(unknown: &SourceUnknown, params: &[f64], grid: &Grid, k0: usize) -> Result<Option<Vec<f64>>> {
    match unknown {
        SourceUnknown::Separated { r } => Ok(Some(params.iter().map(|g| r[k0] * g).collect())),
        SourceUnknown::Matrix { r } => {
            let mut f = vec![vec![0.0; grid.len()]; 2];
            for n in 0..grid.len() {
                for i in 0..2 {
                    f[i][n] = (0..2).map(|j| r[k0][n][i][j] * params[2 * n + j]).sum();
                }
            }
            Ok(Some(ops::curl2(&VectorField { grid: grid.clone(), comps: f })?.values))
        }
        SourceUnknown::Known(_) => Ok(None),
    }
}

/// Data generation at (σ, seed) followed by [`recover_from_data`].
pub fn recover_source(p: &SourcePipeline, noise: NoiseSpec) -> Result<SourceRecovery> {
    let data = generate_cauchy_data(VelocityInput::Analytic(p.solution), p.domain, p.tier, noise, Some(&p.model.f))?;
    recover_from_data(p, &data)
}

/// Reconstructs v, forms rot F(t₀) and, if requested, F(t₀); errors against the model.
pub fn recover_from_data(p: &SourcePipeline, data: &CauchyDataset) -> Result<SourceRecovery> {
    let domain = p.domain;
    let grid = &domain.grid;
    let t0 = domain.t0;
    let k0 = domain.time.index_of(t0).ok_or_else(|| Error::InvalidArgument("t0 is not a time node".into()))?;
    let unknown = source_unknown(p.model, domain);
    let problem = QrProblem {
        domain,
        weight: p.weight,
        dataset: data,
        coeffs: &p.solution.coeffs,
        source: unknown.clone(),
        options: QrOptions { use_snapshot: true, use_dt_traces: true, ..p.options },
    };
    let rec = reconstruct(&problem)?;
    let dtv = estimate_dtv_at_t0(&rec.v, t0)?;
    let a = match p.a_from {
        AFrom::Reconstruction => assemble_a(&rec.v.slices[k0], Some(&rec.z.slices[k0].values), &p.solution.coeffs, t0)?,
        AFrom::Snapshot => {
            let s = data.snapshot.as_ref().ok_or_else(|| Error::TierUnavailable {
                requested: "snapshot".into(),
                reason: format!("dataset has tier {:?}", data.tier),
            })?;
            assemble_a(&VectorField { grid: grid.clone(), comps: s.clone() }, None, &p.solution.coeffs, t0)?
        }
    };
    let rot_f = recover_rot_f(&rot_dtv_at_t0(&rec.z, t0)?, &a)?;
    let mask = &domain.inner_mask;
    let truth_rot = Smooth::sample(&p.model.rot()[0], grid, t0);
    let rot_f_error = Some(relative_l2(grid, mask, &rot_f, &truth_rot));
    let rot_f_direct_error = direct_rot_f(&unknown, &rec.source_params, grid, k0)?.map(|d| relative_l2(grid, mask, &d, &truth_rot));
    let (f, f_error_h1) = match &p.boundary {
        Some(b) => {
            let f = recover_f_part2(&rot_f, grid, b)?;
            let truth = VectorField { grid: grid.clone(), comps: p.model.f.iter().map(|e| Smooth::sample(e, grid, t0)).collect() };
            let e = relative_h1(grid, mask, &f, &truth);
            (Some(f), Some(e))
        }
        None => (None, None),
    };
    Ok(SourceRecovery {
        rot_f_norm: l2_on(grid, mask, &rot_f),
        rot_f,
        a,
        dtv: Some(dtv),
        f,
        rot_f_error,
        rot_f_direct_error,
        f_error_h1,
        d_noise: data.noise_magnitudes.d1.unwrap_or(data.noise_magnitudes.d),
        s_used: rec.s_used,
        converged: rec.stats.converged,
        relative_residual: rec.stats.relative_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::source::build_source;
    use crate::geometry::domain::{build_domain, Preset, TimeSpec};
    use crate::carleman::default_weight;

    fn domain(cells: usize, intervals: usize) -> DomainSpec {
        build_domain(Preset::Rect2dRightEdge, cells, TimeSpec { intervals, ..TimeSpec::default() }).unwrap()
    }

    #[test]
    fn central_difference_is_exact_for_quadratics_in_time() {
        let d = domain(8, 8);
        let v = SpaceTime::from_fn(d.time, |t| {
            VectorField::from_fn(&d.grid, 2, |x| [x[0] * (1.0 + t * t), x[1] - 3.0 * t, 0.0])
        });
        let dtv = estimate_dtv_at_t0(&v, d.t0).unwrap();
        for n in 0..d.grid.len() {
            let x = d.grid.coords(n);
            assert!((dtv.comps[0][n] - 2.0 * d.t0 * x[0]).abs() < 1e-12);
            assert!((dtv.comps[1][n] + 3.0).abs() < 1e-12);
        }
        let z = SpaceTime::from_fn(d.time, |_| VectorField::zeros(&d.grid, 2));
        assert_eq!(estimate_dtv_at_t0(&z, d.t0).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn zero_velocity_gives_zero_a() {
        let d = domain(8, 8);
        let a = assemble_a(&VectorField::zeros(&d.grid, 2), None, &CoefficientFields::zero(2), d.t0).unwrap();
        assert!(a.iter().all(|x| *x == 0.0));
        let dz = vec![1.5; d.grid.len()];
        assert_eq!(recover_rot_f(&dz, &a).unwrap(), dz);
    }

    #[test]
    fn poisson_with_exact_rhs_converges_at_second_order() {
        let err = |cells: usize| {
            let d = domain(cells, 8);
            let m = build_source(&SourceSpec::decaying_default(), d.t0, &d.grid).unwrap();
            let rot = Smooth::sample(&m.rot()[0], &d.grid, d.t0);
            let f = recover_f_part2(&rot, &d.grid, &PoissonBoundary::Dirichlet).unwrap();
            let truth = VectorField { grid: d.grid.clone(), comps: m.f.iter().map(|e| Smooth::sample(e, &d.grid, d.t0)).collect() };
            relative_h1(&d.grid, &d.inner_mask, &f, &truth)
        };
        let (a, b) = (err(32), err(64));
        assert!(a / b > 3.0, "{a} -> {b}");
    }

    #[test]
    fn zero_rhs_gives_zero_field() {
        let d = domain(8, 8);
        let z = vec![0.0; d.grid.len()];
        for bc in [PoissonBoundary::Dirichlet, PoissonBoundary::GammaOnly { gamma: d.gamma.clone(), alpha: 1e-2 }] {
            assert_eq!(recover_f_part2(&z, &d.grid, &bc).unwrap().max_abs(), 0.0);
        }
    }

    #[test]
    fn gradient_source_recovers_zero_rotation() {
        let d = domain(12, 8);
        let w = default_weight(&d, 1.0, 1.0).unwrap();
        let m = build_source(&SourceSpec::obstruction_default(2), d.t0, &d.grid).unwrap();
        let sol = m.companion.clone().unwrap();
        let p = SourcePipeline {
            domain: &d,
            weight: &w,
            model: &m,
            solution: &sol,
            tier: Tier::D1,
            options: QrOptions::default(),
            a_from: AFrom::Snapshot,
            boundary: None,
        };
        let r = recover_source(&p, NoiseSpec::none()).unwrap();
        assert!(r.rot_f_norm <= 1e-8, "{}", r.rot_f_norm);
    }
}
