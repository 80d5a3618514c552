//! Termwise evaluation of the parabolic and elliptic estimates on sampled fields.

use crate::carleman::report::{CarlemanReport, TermSeries};
use crate::error::Result;
use crate::fields::grid::{BoundaryEntry, Grid};
use crate::forward::expr::{curl, dt_vec, Smooth};
use crate::geometry::domain::DomainSpec;
use crate::geometry::weight::WeightFunction;

/// Nodes, time slices and weight values shared by every integral of one inequality.
pub struct Quadrature {
    pub grid: Grid,
    pub times: Vec<f64>,
    pub time_weights: Vec<f64>,
    pub volume: Vec<f64>,
    pub boundary: Vec<BoundaryEntry>,
    /// φ at `[time][node]`.
    pub phi: Vec<Vec<f64>>,
    /// φ(·, t₀+δ), used for both end slices.
    pub phi_end: Vec<f64>,
    pub phi_max: f64,
}

impl Quadrature {
    /// Ω × I with the time-dependent weight.
    pub fn cylinder(domain: &DomainSpec, weight: &WeightFunction) -> Self {
        let grid = domain.grid.clone();
        let times: Vec<f64> = (0..domain.time.n).map(|n| domain.time.time(n)).collect();
        let phi: Vec<Vec<f64>> = times.iter().map(|t| weight.phi_on(&grid, *t)).collect();
        Self::build(grid, times, domain.time.weights(), phi, weight.phi_on(&domain.grid, weight.t0 + weight.delta))
    }

    /// A single slice at time `t` with a time-independent weight.
    pub fn slice(grid: &Grid, t: f64, phi: Vec<f64>) -> Self {
        Self::build(grid.clone(), vec![t], vec![1.0], vec![phi.clone()], phi)
    }

    fn build(grid: Grid, times: Vec<f64>, time_weights: Vec<f64>, phi: Vec<Vec<f64>>, phi_end: Vec<f64>) -> Self {
        let volume = grid.trapezoid_weights();
        let boundary = grid.boundary_quadrature(&grid.faces()).entries;
        let phi_max = phi.iter().flatten().cloned().fold(f64::MIN, f64::max);
        Self { grid, times, time_weights, volume, boundary, phi, phi_end, phi_max }
    }

    /// Σ_c f_c² at every time slice and node.
    pub fn sq<S: Smooth>(&self, fields: &[S]) -> Vec<Vec<f64>> {
        self.times
            .iter()
            .map(|t| {
                let mut acc = vec![0.0; self.grid.len()];
                for f in fields {
                    for (a, v) in acc.iter_mut().zip(f.sample(&self.grid, *t)) {
                        *a += v * v;
                    }
                }
                acc
            })
            .collect()
    }

    /// Largest φ where any of the integrands is nonzero; keeps mantissas away from underflow.
    fn support_phi_max<'a>(&self, terms: impl Iterator<Item = &'a Integral>) -> f64 {
        let mut m = f64::MIN;
        for t in terms {
            for (n, q) in t.sq.iter().enumerate() {
                for (f, p) in q.iter().zip(&self.phi[n]) {
                    if *f != 0.0 && *p > m {
                        m = *p;
                    }
                }
            }
        }
        if m == f64::MIN {
            self.phi_max
        } else {
            m
        }
    }

    fn volume_integral(&self, sq: &[Vec<f64>], s: f64, offset: f64) -> f64 {
        let mut total = 0.0;
        for (n, q) in sq.iter().enumerate() {
            let mut acc = 0.0;
            for ((f, w), p) in q.iter().zip(&self.volume).zip(&self.phi[n]) {
                if *f != 0.0 {
                    acc += w * f * (2.0 * s * p - offset).exp();
                }
            }
            total += self.time_weights[n] * acc;
        }
        total
    }

    fn lateral_integral(&self, sq: &[Vec<f64>], s: f64, offset: f64) -> f64 {
        let mut total = 0.0;
        for (n, q) in sq.iter().enumerate() {
            let mut acc = 0.0;
            for e in &self.boundary {
                let f = q[e.node];
                if f != 0.0 {
                    acc += e.weight * f * (2.0 * s * self.phi[n][e.node] - offset).exp();
                }
            }
            total += self.time_weights[n] * acc;
        }
        total
    }

    fn end_integral(&self, sq: &[Vec<f64>], s: f64, offset: f64) -> f64 {
        [&sq[0], &sq[sq.len() - 1]]
            .iter()
            .map(|q| {
                q.iter()
                    .zip(&self.volume)
                    .zip(&self.phi_end)
                    .map(|((f, w), p)| if *f == 0.0 { 0.0 } else { w * f * (2.0 * s * p - offset).exp() })
                    .sum::<f64>()
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Volume,
    Lateral,
    EndSlices,
}

/// One integral of a statement: `s^power ∫ sq e^{2sφ}` over `region`.
pub struct Integral {
    pub name: &'static str,
    pub power: i32,
    pub region: Region,
    pub sq: Vec<Vec<f64>>,
}

impl Integral {
    pub fn new(name: &'static str, power: i32, region: Region, sq: Vec<Vec<f64>>) -> Self {
        Self { name, power, region, sq }
    }
}

/// Evaluates every integral at every s and assembles the report.
pub fn evaluate(inequality: &str, quad: &Quadrature, lhs: &[Integral], rhs: &[Integral], s_grid: &[f64]) -> Result<CarlemanReport> {
    let peak = quad.support_phi_max(lhs.iter().chain(rhs));
    let offsets: Vec<f64> = s_grid.iter().map(|s| 2.0 * s * peak).collect();
    let series = |terms: &[Integral]| -> Vec<TermSeries> {
        terms
            .iter()
            .map(|t| TermSeries {
                name: t.name.into(),
                s_power: t.power,
                values: s_grid
                    .iter()
                    .zip(&offsets)
                    .map(|(&s, &off)| {
                        let v = match t.region {
                            Region::Volume => quad.volume_integral(&t.sq, s, off),
                            Region::Lateral => quad.lateral_integral(&t.sq, s, off),
                            Region::EndSlices => quad.end_integral(&t.sq, s, off),
                        };
                        v * s.powi(t.power)
                    })
                    .collect(),
            })
            .collect()
    };
    let (l, r) = (series(lhs), series(rhs));
    CarlemanReport::assemble(inequality, s_grid.to_vec(), offsets, l, r)
}

fn grads<S: Smooth>(fields: &[S], dim: usize) -> Vec<S> {
    fields.iter().flat_map(|f| (0..dim).map(move |j| f.dx(j))).collect()
}

fn laps<S: Smooth>(fields: &[S], dim: usize) -> Vec<S> {
    fields.iter().map(|f| f.laplacian(dim)).collect()
}

fn concat<S: Clone>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter().chain(b).cloned().collect()
}

/// The full vorticity-velocity estimate for `v` with source `f` over Ω × I.
pub fn verify_vorticity_velocity<S: Smooth, T: Smooth>(
    v: &[S],
    f: &[T],
    domain: &DomainSpec,
    weight: &WeightFunction,
    s_grid: &[f64],
) -> Result<CarlemanReport> {
    let dim = domain.dim();
    let q = Quadrature::cylinder(domain, weight);
    let z = curl(v);
    let gz = grads(&z, dim);
    let gv = grads(v, dim);
    let dz = dt_vec(&z);
    let sq_z = q.sq(&z);
    let sq_v = q.sq(v);
    let sq_gz = q.sq(&gz);
    let sq_gv = q.sq(&gv);
    let sq_gxt_z = q.sq(&concat(&gz, &dz));
    let lhs = vec![
        Integral::new("dt_rot_v", -1, Region::Volume, q.sq(&dz)),
        Integral::new("dt_v", -1, Region::Volume, q.sq(&dt_vec(v))),
        Integral::new("lap_rot_v", -1, Region::Volume, q.sq(&laps(&z, dim))),
        Integral::new("lap_v", -1, Region::Volume, q.sq(&laps(v, dim))),
        Integral::new("grad_rot_v", 1, Region::Volume, sq_gz.clone()),
        Integral::new("grad_v", 1, Region::Volume, sq_gv.clone()),
        Integral::new("rot_v", 3, Region::Volume, sq_z.clone()),
        Integral::new("v", 3, Region::Volume, sq_v.clone()),
    ];
    let rhs = vec![
        Integral::new("rot_F", 0, Region::Volume, q.sq(&curl(f))),
        Integral::new("bdry_rot_v", 3, Region::Lateral, sq_z.clone()),
        Integral::new("bdry_grad_xt_rot_v", 3, Region::Lateral, sq_gxt_z),
        Integral::new("bdry_v", 3, Region::Lateral, sq_v),
        Integral::new("bdry_grad_v", 3, Region::Lateral, sq_gv),
        Integral::new("end_rot_v", 3, Region::EndSlices, sq_z),
        Integral::new("end_grad_rot_v", 3, Region::EndSlices, sq_gz),
    ];
    evaluate("vorticity_velocity", &q, &lhs, &rhs, s_grid)
}

/// The heat estimate for `u` with `G = ∂ₜu − Δu`.
pub fn verify_heat<S: Smooth>(u: &[S], domain: &DomainSpec, weight: &WeightFunction, s_grid: &[f64]) -> Result<CarlemanReport> {
    let dim = domain.dim();
    let q = Quadrature::cylinder(domain, weight);
    let du = dt_vec(u);
    let lu = laps(u, dim);
    let g: Vec<S> = du.iter().zip(&lu).map(|(a, b)| a.minus(b)).collect();
    let gu = grads(u, dim);
    let sq_u = q.sq(u);
    let sq_gu = q.sq(&gu);
    let lhs = vec![
        Integral::new("dt_u", -1, Region::Volume, q.sq(&du)),
        Integral::new("lap_u", -1, Region::Volume, q.sq(&lu)),
        Integral::new("grad_u", 1, Region::Volume, sq_gu.clone()),
        Integral::new("u", 3, Region::Volume, sq_u.clone()),
    ];
    let rhs = vec![
        Integral::new("G", 0, Region::Volume, q.sq(&g)),
        Integral::new("bdry_grad_xt_u", 3, Region::Lateral, q.sq(&concat(&gu, &du))),
        Integral::new("bdry_u", 3, Region::Lateral, sq_u.clone()),
        Integral::new("end_grad_u", 3, Region::EndSlices, sq_gu),
        Integral::new("end_u", 3, Region::EndSlices, sq_u),
    ];
    evaluate("heat", &q, &lhs, &rhs, s_grid)
}

fn elliptic_terms<S: Smooth>(r: &[S], q: &Quadrature, dim: usize) -> (Vec<Integral>, Vec<Integral>) {
    let g: Vec<S> = laps(r, dim).iter().map(|l| l.times(-1.0)).collect();
    let gr = grads(r, dim);
    let sq_r = q.sq(r);
    let sq_gr = q.sq(&gr);
    let lhs = vec![
        Integral::new("grad_r", 1, Region::Volume, sq_gr.clone()),
        Integral::new("r", 3, Region::Volume, sq_r.clone()),
    ];
    let rhs = vec![
        Integral::new("g", 0, Region::Volume, q.sq(&g)),
        Integral::new("bdry_grad_r", 3, Region::Lateral, sq_gr),
        Integral::new("bdry_r", 3, Region::Lateral, sq_r),
    ];
    (lhs, rhs)
}

/// The elliptic estimate over Ω × I with `g = −Δr` and the time-dependent weight.
pub fn verify_elliptic_spacetime<S: Smooth>(r: &[S], domain: &DomainSpec, weight: &WeightFunction, s_grid: &[f64]) -> Result<CarlemanReport> {
    let q = Quadrature::cylinder(domain, weight);
    let (lhs, rhs) = elliptic_terms(r, &q, domain.dim());
    evaluate("elliptic_spacetime", &q, &lhs, &rhs, s_grid)
}

/// The elliptic estimate on Ω for `w(·, t)` with `h = −Δw` and the weight φ(·, t₀).
pub fn verify_elliptic_slice<S: Smooth>(
    w: &[S],
    t: f64,
    domain: &DomainSpec,
    weight: &WeightFunction,
    s_grid: &[f64],
) -> Result<CarlemanReport> {
    let q = Quadrature::slice(&domain.grid, t, weight.phi_on(&domain.grid, weight.t0));
    let (lhs, rhs) = elliptic_terms(w, &q, domain.dim());
    evaluate("elliptic_slice", &q, &lhs, &rhs, s_grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carleman::default_weight;
    use crate::carleman::report::default_s_grid;
    use crate::forward::funcs::{sin_sin, Mono, Space, StField, Time};
    use crate::forward::solution::ManufacturedSolution;
    use crate::geometry::domain::{build_domain, Preset, TimeSpec};
    use std::f64::consts::PI;

    fn setup(cells: usize) -> (DomainSpec, WeightFunction) {
        let d = build_domain(Preset::Rect2dRightEdge, cells, TimeSpec::default()).unwrap();
        let w = default_weight(&d, 2.0, 1.0).unwrap();
        (d, w)
    }

    #[test]
    fn zero_fields_are_trivial() {
        let (d, w) = setup(12);
        let z = vec![StField::zero(), StField::zero()];
        let r = verify_vorticity_velocity(&z, &z, &d, &w, &default_s_grid()).unwrap();
        assert!(r.trivial && r.rho.iter().all(|v| *v == 0.0));
        let r1 = verify_heat(&z[..1], &d, &w, &default_s_grid()).unwrap();
        assert!(r1.trivial);
    }

    #[test]
    fn constant_weight_integral_matches_area() {
        let (d, _) = setup(8);
        let q = Quadrature::slice(&d.grid, 0.0, vec![0.3; d.grid.len()]);
        let one = vec![StField::term(1.0, Space::one(), Time::constant())];
        let sq = q.sq(&one);
        let area: f64 = d.grid.trapezoid_weights().iter().sum();
        let v = q.volume_integral(&sq, 5.0, 0.0);
        assert!((v - area * 3.0f64.exp()).abs() < 1e-12 * v);
        let perim = q.lateral_integral(&sq, 5.0, 0.0);
        assert!((perim - 4.0 * 3.0f64.exp()).abs() < 1e-12 * perim);
    }

    #[test]
    fn vorticity_velocity_homogeneity() {
        let (d, w) = setup(12);
        let sol = ManufacturedSolution::taylor_green(PI);
        let f = sol.forcing();
        let a = verify_vorticity_velocity(&sol.v, &f, &d, &w, &default_s_grid()).unwrap();
        let sv: Vec<StField> = sol.v.iter().map(|c| c.scale(-3.5)).collect();
        let sf: Vec<_> = f.iter().map(|c| c.times(-3.5)).collect();
        let b = verify_vorticity_velocity(&sv, &sf, &d, &w, &default_s_grid()).unwrap();
        assert!(a.rho_difference(&b) < 1e-10);
        assert!(a.rho.iter().all(|r| r.is_finite() && *r > 0.0));
    }

    #[test]
    fn heat_mode_has_zero_source_term() {
        let (d, w) = setup(12);
        let u = vec![StField::term(1.0, sin_sin(PI), Time::exp(-2.0 * PI * PI))];
        let r = verify_heat(&u, &d, &w, &default_s_grid()).unwrap();
        let g = r.rhs.iter().find(|t| t.name == "G").unwrap();
        assert!(g.values.iter().all(|v| *v < 1e-20));
        assert!(r.rho.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn constant_u_is_bounded_by_boundary_terms() {
        let (d, w) = setup(12);
        let u = vec![StField::term(2.0, Space::one(), Time::constant())];
        let r = verify_heat(&u, &d, &w, &default_s_grid()).unwrap();
        assert!(r.rho.iter().all(|v| v.is_finite() && *v > 0.0));
        let k = r.s.len() - 1;
        let u3 = r.lhs.iter().find(|t| t.name == "u").unwrap().values[k];
        assert!((u3 - r.lhs_total(k)).abs() <= 1e-12 * u3);
    }

    #[test]
    fn time_constant_spacetime_equals_integrated_slice_without_beta() {
        let (d, w) = setup(12);
        let w0 = w.with_beta(0.0);
        let r = vec![StField::term(1.0, Space::Poly { center: [0.0; 3], monos: vec![Mono { c: 1.0, e: [2, 1, 0] }] }, Time::constant())];
        let l2 = verify_elliptic_spacetime(&r, &d, &w0, &default_s_grid()).unwrap();
        let l3 = verify_elliptic_slice(&r, d.t0, &d, &w0, &default_s_grid()).unwrap();
        assert!(l2.rho_difference(&l3) < 1e-12);
        let len: f64 = d.time.weights().iter().sum();
        let ratio = l2.lhs_total(3) / l3.lhs_total(3);
        assert!((ratio - len).abs() < 1e-12 * len);
    }
}
