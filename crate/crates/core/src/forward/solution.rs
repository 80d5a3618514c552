//! Manufactured solutions of the linearized system and their forcing.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::field::VectorField;
use crate::fields::grid::Grid;
use crate::forward::expr::{curl, divergence, Expr, Smooth};
use crate::forward::funcs::{perp_grad, Mono, Space, StField, Time};

/// Transport coefficients A and B.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientFields {
    pub a: Vec<StField>,
    pub b: Vec<StField>,
}

impl CoefficientFields {
    pub fn zero(dim: usize) -> Self {
        Self { a: vec![StField::zero(); dim], b: vec![StField::zero(); dim] }
    }

    /// Smooth, time-dependent A and a linear-in-x B.
    pub fn smooth(dim: usize) -> Self {
        let half = std::f64::consts::FRAC_PI_2;
        let mut k = [0.0; 3];
        let mut p = [half; 3];
        k[1] = PI;
        p[1] = 0.0;
        let a0 = StField::term(0.5, Space::trig(k, p), Time::poly(0.0, vec![1.0, 1.0]));
        let mut k1 = [0.0; 3];
        let mut p1 = [half; 3];
        k1[0] = PI;
        p1[0] = half;
        let a1 = StField::term(0.3, Space::trig(k1, p1), Time::constant());
        let lin = |c: [f64; 3]| {
            let monos = (0..dim)
                .filter(|&j| c[j] != 0.0)
                .map(|j| {
                    let mut e = [0; 3];
                    e[j] = 1;
                    Mono { c: c[j], e }
                })
                .collect();
            StField::term(1.0, Space::Poly { center: [0.0; 3], monos }, Time::constant())
        };
        let mut a = vec![a0, a1];
        let mut b = vec![lin([0.2, 0.1, 0.05]), lin([-0.3, 0.15, 0.1])];
        if dim == 3 {
            a.push(StField::term(0.2, Space::trig([PI, 0.0, 0.0], [0.0, half, half]), Time::constant()));
            b.push(lin([0.1, -0.2, 0.25]));
        }
        Self { a, b }
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().chain(&self.b).all(|f| f.is_zero())
    }

    /// Copy with B set to zero.
    pub fn without_b(&self) -> Self {
        Self { a: self.a.clone(), b: vec![StField::zero(); self.dim()] }
    }
}

/// Closed-form `(v, p)` together with the coefficients of the system it solves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManufacturedSolution {
    pub name: String,
    pub dim: usize,
    pub v: Vec<StField>,
    pub p: StField,
    pub coeffs: CoefficientFields,
}

/// `F = ∂ₜv − Δv + (A·∇)v + (v·∇)B + ∇p`, exact.
pub fn mms_forcing(v: &[StField], p: &StField, coeffs: &CoefficientFields) -> Vec<Expr> {
    let dim = v.len();
    (0..dim)
        .map(|i| {
            let mut f: Expr = v[i].dt().sub(&v[i].laplacian(dim)).add(&p.dx(i)).into();
            for j in 0..dim {
                f = f.plus(&Expr::product(&coeffs.a[j], &v[i].dx(j)));
                f = f.plus(&Expr::product(&v[j], &coeffs.b[i].dx(j)));
            }
            f
        })
        .collect()
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("dimension must be 2 or 3, got {dim}")))
    }
}

impl ManufacturedSolution {
    /// 2D velocity `∇^⊥Ψ` from a stream function.
    pub fn from_stream(name: &str, psi: &StField, p: StField, coeffs: CoefficientFields) -> Self {
        Self { name: name.into(), dim: 2, v: perp_grad(psi).to_vec(), p, coeffs }
    }

    /// 3D velocity `rot q` from a vector potential.
    pub fn from_potential(name: &str, q: &[StField; 3], p: StField, coeffs: CoefficientFields) -> Self {
        Self { name: name.into(), dim: 3, v: curl(q), p, coeffs }
    }

    /// Sum of decaying Stokes modes `c sin(k₁x₁) sin(k₂x₂) e^{−(k₁²+k₂²)t}` as stream function;
    /// with A = B = 0 and p = 0 the forcing vanishes.
    pub fn heat_modes(modes: &[(f64, f64, f64)]) -> Self {
        let psi = modes.iter().fold(StField::zero(), |acc, &(c, k1, k2)| {
            acc.add(&StField::term(
                c,
                Space::trig([k1, k2, 0.0], [0.0, 0.0, std::f64::consts::FRAC_PI_2]),
                Time::exp(-(k1 * k1 + k2 * k2)),
            ))
        });
        Self::from_stream("heat_modes", &psi, StField::zero(), CoefficientFields::zero(2))
    }

    /// `v = (sin kx₁ cos kx₂, −cos kx₁ sin kx₂) e^{−2k²t}`, `p = 0`.
    pub fn taylor_green(k: f64) -> Self {
        let mut s = Self::heat_modes(&[(1.0 / k, k, k)]);
        s.name = "taylor_green".into();
        s
    }

    /// Divergence-free 3D field from the potential `q = (0, 0, sin kx₁ sin kx₂ cos kx₃) e^{−t}`
    /// plus a rotated copy.
    pub fn taylor_green_3d(k: f64) -> Self {
        let h = std::f64::consts::FRAC_PI_2;
        let q = [
            StField::term(0.5, Space::trig([k, k, k], [h, 0.0, 0.0]), Time::exp(-1.0)),
            StField::zero(),
            StField::term(1.0, Space::trig([k, k, k], [0.0, 0.0, h]), Time::exp(-1.0)),
        ];
        Self::from_potential("taylor_green_3d", &q, StField::zero(), CoefficientFields::zero(3))
    }

    /// `v = 0` with pressure ψ; the forcing is `∇ψ`.
    pub fn obstruction(psi: StField, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            name: "obstruction".into(),
            dim,
            v: vec![StField::zero(); dim],
            p: psi,
            coeffs: CoefficientFields::zero(dim),
        })
    }

    pub fn zero(dim: usize) -> Result<Self> {
        Self::obstruction(StField::zero(), dim).map(|mut s| {
            s.name = "zero".into();
            s
        })
    }

    pub fn with_coeffs(mut self, coeffs: CoefficientFields) -> Result<Self> {
        if coeffs.dim() != self.dim || coeffs.b.len() != self.dim {
            return Err(Error::ShapeMismatch(format!(
                "coefficients of dimension {} for a {}-d solution",
                coeffs.dim(),
                self.dim
            )));
        }
        self.coeffs = coeffs;
        Ok(self)
    }

    pub fn with_pressure(mut self, p: StField) -> Self {
        self.p = p;
        self
    }

    /// Velocity and pressure scaled by `a`.
    pub fn scaled(&self, a: f64) -> Self {
        Self {
            name: self.name.clone(),
            dim: self.dim,
            v: self.v.iter().map(|c| c.scale(a)).collect(),
            p: self.p.scale(a),
            coeffs: self.coeffs.clone(),
        }
    }

    pub fn vorticity(&self) -> Vec<StField> {
        curl(&self.v)
    }

    pub fn forcing(&self) -> Vec<Expr> {
        mms_forcing(&self.v, &self.p, &self.coeffs)
    }

    pub fn divergence(&self) -> StField {
        divergence(&self.v)
    }

    pub fn velocity_at(&self, x: &[f64; 3], t: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (o, c) in out.iter_mut().zip(&self.v) {
            *o = c.eval(x, t);
        }
        out
    }

    /// Residual of the momentum equation at a point with the given forcing.
    pub fn momentum_residual(&self, forcing: &[Expr], x: &[f64; 3], t: f64) -> f64 {
        let exact = self.forcing();
        (0..self.dim)
            .map(|i| (exact[i].eval(x, t) - forcing[i].eval(x, t)).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn sample_velocity(&self, grid: &Grid, t: f64) -> VectorField {
        sample_vector(&self.v, grid, t)
    }

    pub fn sample_vorticity(&self, grid: &Grid, t: f64) -> VectorField {
        sample_vector(&self.vorticity(), grid, t)
    }
}

/// Samples each component on the grid.
pub fn sample_vector<S: Smooth>(v: &[S], grid: &Grid, t: f64) -> VectorField {
    VectorField { grid: grid.clone(), comps: v.iter().map(|c| c.sample(grid, t)).collect() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::grid::TimeAxis;
    use crate::fields::ops;
    use crate::fields::{ScalarField, SpaceTime};
    use crate::forward::funcs::radial_bump;

    #[test]
    fn taylor_green_has_zero_forcing() {
        let s = ManufacturedSolution::taylor_green(1.0);
        let f = s.forcing();
        for x in [[0.1, 0.2, 0.0], [0.7, 0.9, 0.0]] {
            assert!(f[0].eval(&x, 0.3).abs() < 1e-13 && f[1].eval(&x, 0.3).abs() < 1e-13);
        }
        let v = s.velocity_at(&[0.3, 0.4, 0.0], 0.2);
        assert!((v[0] - 0.3f64.sin() * 0.4f64.cos() * (-0.4f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn obstruction_forcing_is_gradient() {
        let psi = StField::term(1.0, radial_bump([0.5, 0.5, 0.0], 0.3, 4, 2), Time::constant());
        let s = ManufacturedSolution::obstruction(psi.clone(), 2).unwrap();
        let f = s.forcing();
        let x = [0.55, 0.45, 0.0];
        assert!((f[0].eval(&x, 0.0) - psi.dx(0).eval(&x, 0.0)).abs() < 1e-14);
        assert!(curl(&f)[0].eval(&x, 0.0).abs() < 1e-12);
    }

    #[test]
    fn linear_velocity_with_constant_coefficients() {
        // v = (x₁ + 2x₂, 3x₁ − x₂), A = (1, 2), B = (x₂, 0)
        let lin = |c0: f64, c1: f64| {
            StField::term(
                1.0,
                Space::Poly {
                    center: [0.0; 3],
                    monos: vec![Mono { c: c0, e: [1, 0, 0] }, Mono { c: c1, e: [0, 1, 0] }],
                },
                Time::constant(),
            )
        };
        let constant = |c: f64| StField::term(c, Space::one(), Time::constant());
        let coeffs = CoefficientFields { a: vec![constant(1.0), constant(2.0)], b: vec![lin(0.0, 1.0), StField::zero()] };
        let s = ManufacturedSolution {
            name: "linear".into(),
            dim: 2,
            v: vec![lin(1.0, 2.0), lin(3.0, -1.0)],
            p: StField::zero(),
            coeffs,
        };
        assert!(s.divergence().eval(&[0.3, 0.8, 0.0], 0.0).abs() < 1e-15);
        // (A·∇)v = (1 + 4, 3 − 2), (v·∇)B = (v₂, 0)
        let f = s.forcing();
        let x = [0.3, 0.8, 0.0];
        assert!((f[0].eval(&x, 0.0) - (5.0 + 3.0 * 0.3 - 0.8)).abs() < 1e-14);
        assert!((f[1].eval(&x, 0.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn smooth_coefficient_forcing_matches_stencils() {
        let s = ManufacturedSolution::taylor_green(PI).with_coeffs(CoefficientFields::smooth(2)).unwrap();
        let f = s.forcing();
        let grid = Grid::new_box(&[0.0, 0.0], &[1.0, 1.0], &[64, 64]).unwrap();
        let t = 0.3;
        let time = TimeAxis::symmetric(t, 1e-3, 2);
        let vt = SpaceTime::from_fn(time, |tt| s.sample_velocity(&grid, tt));
        let dtv = ops::time_derivative_vec(&vt).unwrap().slices[1].clone();
        let v = &vt.slices[1];
        let lap = ops::vector_laplacian(v).unwrap();
        let a = sample_vector(&s.coeffs.a, &grid, t);
        let b = sample_vector(&s.coeffs.b, &grid, t);
        let mut err: f64 = 0.0;
        for i in 0..2 {
            let mut num = ScalarField::zeros(&grid);
            for n in 0..grid.len() {
                num.values[n] = dtv.comps[i][n] - lap.comps[i][n];
            }
            for j in 0..2 {
                let dv = ops::d1(&grid, &v.comps[i], j);
                let db = ops::d1(&grid, &b.comps[i], j);
                for n in 0..grid.len() {
                    num.values[n] += a.comps[j][n] * dv[n] + v.comps[j][n] * db[n];
                }
            }
            for n in 0..grid.len() {
                if !grid.is_boundary(n) {
                    let x = grid.coords(n);
                    err = err.max((num.values[n] - f[i].eval(&x, t)).abs());
                }
            }
        }
        let scale = f[0].sample(&grid, t).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(err < 5e-3 * scale, "err {err} scale {scale}");
    }

    #[test]
    fn three_dimensional_field_is_solenoidal() {
        let s = ManufacturedSolution::taylor_green_3d(PI);
        let div = s.divergence();
        for x in [[0.1, 0.2, 0.3], [0.7, 0.5, 0.9]] {
            assert!(div.eval(&x, 0.4).abs() < 1e-12);
        }
        assert_eq!(s.forcing().len(), 3);
    }
}
