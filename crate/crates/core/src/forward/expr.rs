//! Sums of products of [`StField`]s, closed under differentiation by the Leibniz rule.

use serde::{Deserialize, Serialize};

use crate::fields::grid::Grid;
use crate::forward::funcs::StField;

/// Common calculus on closed-form space-time functions.
pub trait Smooth: Clone {
    fn zero() -> Self;
    fn dx(&self, axis: usize) -> Self;
    fn dt(&self) -> Self;
    fn plus(&self, other: &Self) -> Self;
    fn times(&self, a: f64) -> Self;
    fn eval(&self, x: &[f64; 3], t: f64) -> f64;

    fn minus(&self, other: &Self) -> Self {
        self.plus(&other.times(-1.0))
    }

    fn deriv(&self, ex: [u32; 3], et: u32) -> Self {
        let mut f = self.clone();
        for (axis, &n) in ex.iter().enumerate() {
            for _ in 0..n {
                f = f.dx(axis);
            }
        }
        for _ in 0..et {
            f = f.dt();
        }
        f
    }

    fn laplacian(&self, dim: usize) -> Self {
        let mut out = Self::zero();
        for a in 0..dim {
            out = out.plus(&self.dx(a).dx(a));
        }
        out
    }

    fn sample(&self, grid: &Grid, t: f64) -> Vec<f64> {
        (0..grid.len()).map(|i| self.eval(&grid.coords(i), t)).collect()
    }
}

impl Smooth for StField {
    fn zero() -> Self {
        StField::zero()
    }
    fn dx(&self, axis: usize) -> Self {
        StField::dx(self, axis)
    }
    fn dt(&self) -> Self {
        StField::dt(self)
    }
    fn plus(&self, other: &Self) -> Self {
        self.add(other)
    }
    fn times(&self, a: f64) -> Self {
        self.scale(a)
    }
    fn eval(&self, x: &[f64; 3], t: f64) -> f64 {
        StField::eval(self, x, t)
    }
}

/// `linear + Σ fᵢ gᵢ`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Expr {
    pub linear: StField,
    pub products: Vec<(StField, StField)>,
}

impl From<StField> for Expr {
    fn from(linear: StField) -> Self {
        Self { linear, products: Vec::new() }
    }
}

impl Expr {
    pub fn product(f: &StField, g: &StField) -> Self {
        let mut e = Self::default();
        if !f.is_zero() && !g.is_zero() {
            e.products.push((f.clone(), g.clone()));
        }
        e
    }

    pub fn is_zero(&self) -> bool {
        self.linear.is_zero() && self.products.is_empty()
    }

    fn map_pairs(&self, lin: StField, f: impl Fn(&StField, &StField) -> [(StField, StField); 2]) -> Self {
        let mut products = Vec::with_capacity(2 * self.products.len());
        for (a, b) in &self.products {
            for (p, q) in f(a, b) {
                if !p.is_zero() && !q.is_zero() {
                    products.push((p, q));
                }
            }
        }
        Self { linear: lin, products }
    }

    /// The expression with time frozen at `t`.
    pub fn at_time(&self, t: f64) -> Self {
        Self {
            linear: self.linear.at_time(t),
            products: self.products.iter().map(|(a, b)| (a.at_time(t), b.at_time(t))).collect(),
        }
    }
}

impl Smooth for Expr {
    fn zero() -> Self {
        Self::default()
    }

    fn dx(&self, axis: usize) -> Self {
        self.map_pairs(self.linear.dx(axis), |a, b| [(a.dx(axis), b.clone()), (a.clone(), b.dx(axis))])
    }

    fn dt(&self) -> Self {
        self.map_pairs(self.linear.dt(), |a, b| [(a.dt(), b.clone()), (a.clone(), b.dt())])
    }

    fn plus(&self, other: &Self) -> Self {
        let mut products = self.products.clone();
        products.extend(other.products.iter().cloned());
        Self { linear: self.linear.add(&other.linear), products }
    }

    fn times(&self, a: f64) -> Self {
        if a == 0.0 {
            return Self::default();
        }
        Self {
            linear: self.linear.scale(a),
            products: self.products.iter().map(|(f, g)| (f.scale(a), g.clone())).collect(),
        }
    }

    fn eval(&self, x: &[f64; 3], t: f64) -> f64 {
        self.linear.eval(x, t) + self.products.iter().map(|(f, g)| f.eval(x, t) * g.eval(x, t)).sum::<f64>()
    }
}

/// Curl: one component in 2D, three in 3D.
pub fn curl<S: Smooth>(v: &[S]) -> Vec<S> {
    match v.len() {
        2 => vec![v[1].dx(0).minus(&v[0].dx(1))],
        3 => vec![
            v[2].dx(1).minus(&v[1].dx(2)),
            v[0].dx(2).minus(&v[2].dx(0)),
            v[1].dx(0).minus(&v[0].dx(1)),
        ],
        n => panic!("curl of a {n}-component field"),
    }
}

/// Curl of a 2D scalar, `(∂₂z, −∂₁z)`, or of a 3D vector.
pub fn rot_back<S: Smooth>(z: &[S], dim: usize) -> Vec<S> {
    if dim == 2 {
        vec![z[0].dx(1), z[0].dx(0).times(-1.0)]
    } else {
        curl(z)
    }
}

pub fn divergence<S: Smooth>(v: &[S]) -> S {
    v.iter().enumerate().fold(S::zero(), |acc, (a, c)| acc.plus(&c.dx(a)))
}

pub fn gradient<S: Smooth>(f: &S, dim: usize) -> Vec<S> {
    (0..dim).map(|a| f.dx(a)).collect()
}

pub fn eval_vec<S: Smooth>(v: &[S], x: &[f64; 3], t: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (o, c) in out.iter_mut().zip(v) {
        *o = c.eval(x, t);
    }
    out
}

pub fn dt_vec<S: Smooth>(v: &[S]) -> Vec<S> {
    v.iter().map(|c| c.dt()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::funcs::{radial_bump, sin_sin, Mono, Space, Time};

    #[test]
    fn leibniz_matches_pointwise_product() {
        let f = StField::term(1.0, sin_sin(2.0), Time::exp(0.5));
        let g = StField::term(
            3.0,
            Space::Poly { center: [0.0; 3], monos: vec![Mono { c: 1.0, e: [1, 2, 0] }] },
            Time::poly(0.0, vec![1.0, 1.0]),
        )
        .add(&StField::term(1.0, radial_bump([0.5, 0.5, 0.0], 0.4, 4, 2), Time::constant()));
        let e = Expr::product(&f, &g);
        let x = [0.37, 0.61, 0.0];
        let t = 0.3;
        let h = 1e-5;
        for a in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[a] += h;
            xm[a] -= h;
            let fd = (e.eval(&xp, t) - e.eval(&xm, t)) / (2.0 * h);
            assert!((fd - e.dx(a).eval(&x, t)).abs() < 1e-6);
        }
        let fd = (e.eval(&x, t + h) - e.eval(&x, t - h)) / (2.0 * h);
        assert!((fd - e.dt().eval(&x, t)).abs() < 1e-6);
        let d2 = e.dx(0).dx(1);
        let fd2 = (e.dx(0).eval(&[x[0], x[1] + h, 0.0], t) - e.dx(0).eval(&[x[0], x[1] - h, 0.0], t)) / (2.0 * h);
        assert!((fd2 - d2.eval(&x, t)).abs() < 1e-5);
    }

    #[test]
    fn curl_of_gradient_vanishes() {
        let f: Expr = StField::term(1.0, sin_sin(1.5), Time::exp(-1.0)).into();
        let g = Expr::product(&StField::term(1.0, sin_sin(0.7), Time::constant()), &StField::term(1.0, sin_sin(2.0), Time::constant()));
        let p = f.plus(&g);
        let c = curl(&gradient(&p, 2));
        for x in [[0.2, 0.3, 0.0], [0.8, 0.1, 0.0]] {
            assert!(c[0].eval(&x, 0.4).abs() < 1e-12);
        }
    }
}
