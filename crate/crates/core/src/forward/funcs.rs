//! Closed-form space-time functions with exact derivatives.
//!
//! A [`StField`] is a finite sum of separated terms `c · S(x) · T(t)`, which is
//! closed under differentiation in every variable.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::fields::grid::Grid;

/// Monomial `c · Π (x_a − center_a)^e_a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mono {
    pub c: f64,
    pub e: [u32; 3],
}

/// Spatial factor of a term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Space {
    /// Π_a sin(k_a x_a + p_a); unused axes carry k = 0, p = π/2.
    Trig { k: [f64; 3], p: [f64; 3] },
    /// Polynomial in `x − center`.
    Poly { center: [f64; 3], monos: Vec<Mono> },
    /// Polynomial in `x − center` restricted to the open ball of `radius`, zero outside.
    Clipped { center: [f64; 3], radius: f64, monos: Vec<Mono> },
}

/// Temporal factor `q(t − t_ref) · e^{rate (t − t_ref)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Time {
    pub t_ref: f64,
    pub poly: Vec<f64>,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    pub space: Space,
    pub time: Time,
}

/// Sum of separated terms.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StField {
    pub terms: Vec<Term>,
}

fn mono_eval(monos: &[Mono], center: &[f64; 3], x: &[f64; 3]) -> f64 {
    let y = [x[0] - center[0], x[1] - center[1], x[2] - center[2]];
    monos
        .iter()
        .map(|m| m.c * y[0].powi(m.e[0] as i32) * y[1].powi(m.e[1] as i32) * y[2].powi(m.e[2] as i32))
        .sum()
}

fn mono_deriv(monos: &[Mono], axis: usize) -> Vec<Mono> {
    monos
        .iter()
        .filter(|m| m.e[axis] > 0)
        .map(|m| {
            let mut e = m.e;
            e[axis] -= 1;
            Mono { c: m.c * m.e[axis] as f64, e }
        })
        .collect()
}

/// Product of monomial lists, merging equal exponents.
pub fn mono_mul(a: &[Mono], b: &[Mono]) -> Vec<Mono> {
    let mut out: Vec<Mono> = Vec::new();
    for x in a {
        for y in b {
            let e = [x.e[0] + y.e[0], x.e[1] + y.e[1], x.e[2] + y.e[2]];
            match out.iter_mut().find(|m| m.e == e) {
                Some(m) => m.c += x.c * y.c,
                None => out.push(Mono { c: x.c * y.c, e }),
            }
        }
    }
    out.retain(|m| m.c != 0.0);
    out
}

impl Space {
    pub fn one() -> Self {
        Space::Poly { center: [0.0; 3], monos: vec![Mono { c: 1.0, e: [0; 3] }] }
    }

    pub fn trig(k: [f64; 3], p: [f64; 3]) -> Self {
        Space::Trig { k, p }
    }

    pub fn eval(&self, x: &[f64; 3]) -> f64 {
        match self {
            Space::Trig { k, p } => (0..3).map(|a| (k[a] * x[a] + p[a]).sin()).product(),
            Space::Poly { center, monos } => mono_eval(monos, center, x),
            Space::Clipped { center, radius, monos } => {
                let r2: f64 = (0..3).map(|a| (x[a] - center[a]) * (x[a] - center[a])).sum();
                if r2 < radius * radius {
                    mono_eval(monos, center, x)
                } else {
                    0.0
                }
            }
        }
    }

    /// Derivative along `axis` as `(factor, space)`, or `None` if identically zero.
    fn deriv(&self, axis: usize) -> Option<(f64, Space)> {
        match self {
            Space::Trig { k, p } => {
                if k[axis] == 0.0 {
                    return None;
                }
                let mut p2 = *p;
                p2[axis] += FRAC_PI_2;
                Some((k[axis], Space::Trig { k: *k, p: p2 }))
            }
            Space::Poly { center, monos } => {
                let d = mono_deriv(monos, axis);
                (!d.is_empty()).then(|| (1.0, Space::Poly { center: *center, monos: d }))
            }
            Space::Clipped { center, radius, monos } => {
                let d = mono_deriv(monos, axis);
                (!d.is_empty()).then(|| (1.0, Space::Clipped { center: *center, radius: *radius, monos: d }))
            }
        }
    }
}

impl Time {
    pub fn constant() -> Self {
        Self { t_ref: 0.0, poly: vec![1.0], rate: 0.0 }
    }

    pub fn poly(t_ref: f64, poly: Vec<f64>) -> Self {
        Self { t_ref, poly, rate: 0.0 }
    }

    pub fn exp(rate: f64) -> Self {
        Self { t_ref: 0.0, poly: vec![1.0], rate }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let y = t - self.t_ref;
        let q = self.poly.iter().rev().fold(0.0, |acc, c| acc * y + c);
        q * (self.rate * y).exp()
    }

    pub fn deriv(&self) -> Self {
        let n = self.poly.len();
        let mut poly = vec![0.0; n];
        for (i, c) in self.poly.iter().enumerate() {
            poly[i] += self.rate * c;
            if i > 0 {
                poly[i - 1] += i as f64 * c;
            }
        }
        while poly.len() > 1 && *poly.last().unwrap() == 0.0 {
            poly.pop();
        }
        Self { t_ref: self.t_ref, poly, rate: self.rate }
    }

    pub fn is_zero(&self) -> bool {
        self.poly.iter().all(|c| *c == 0.0)
    }

    /// Product of two temporal factors sharing `t_ref`.
    pub fn mul(&self, other: &Time) -> Time {
        assert!(
            (self.t_ref - other.t_ref).abs() < 1e-15 || other.poly.len() == 1 && other.rate == 0.0
                || self.poly.len() == 1 && self.rate == 0.0,
            "temporal factors with different reference times"
        );
        let t_ref = if self.poly.len() == 1 && self.rate == 0.0 { other.t_ref } else { self.t_ref };
        let mut poly = vec![0.0; self.poly.len() + other.poly.len() - 1];
        for (i, a) in self.poly.iter().enumerate() {
            for (j, b) in other.poly.iter().enumerate() {
                poly[i + j] += a * b;
            }
        }
        Time { t_ref, poly, rate: self.rate + other.rate }
    }
}

impl Term {
    pub fn new(coef: f64, space: Space, time: Time) -> Self {
        Self { coef, space, time }
    }

    pub fn eval(&self, x: &[f64; 3], t: f64) -> f64 {
        self.coef * self.space.eval(x) * self.time.eval(t)
    }
}

impl StField {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn term(coef: f64, space: Space, time: Time) -> Self {
        Self { terms: vec![Term::new(coef, space, time)] }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &[f64; 3], t: f64) -> f64 {
        self.terms.iter().map(|term| term.eval(x, t)).sum()
    }

    pub fn dx(&self, axis: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .filter_map(|term| {
                term.space
                    .deriv(axis)
                    .map(|(f, s)| Term::new(term.coef * f, s, term.time.clone()))
            })
            .collect();
        Self { terms }
    }

    pub fn dt(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .filter_map(|term| {
                let d = term.time.deriv();
                (!d.is_zero()).then(|| Term::new(term.coef, term.space.clone(), d))
            })
            .collect();
        Self { terms }
    }

    /// Mixed derivative `∂^{ex}_x ∂^{et}_t`.
    pub fn deriv(&self, ex: [u32; 3], et: u32) -> Self {
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

    pub fn laplacian(&self, dim: usize) -> Self {
        let mut out = Self::zero();
        for a in 0..dim {
            out = out.add(&self.dx(a).dx(a));
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self { terms }
    }

    pub fn scale(&self, a: f64) -> Self {
        if a == 0.0 {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|t| Term { coef: a * t.coef, ..t.clone() }).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Multiplies every term by a temporal factor.
    pub fn times_time(&self, r: &Time) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| Term { coef: t.coef, space: t.space.clone(), time: t.time.mul(r) })
                .collect(),
        }
    }

    /// The function frozen at time `t`, as a time-independent field.
    pub fn at_time(&self, t: f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|term| Term::new(term.coef * term.time.eval(t), term.space.clone(), Time::constant()))
                .collect(),
        }
    }

    /// Values at every node of `grid` at time `t`.
    pub fn sample(&self, grid: &Grid, t: f64) -> Vec<f64> {
        (0..grid.len()).map(|i| self.eval(&grid.coords(i), t)).collect()
    }
}

/// Planar vector field `∇^⊥q = (∂₂q, −∂₁q)`.
pub fn perp_grad(q: &StField) -> [StField; 2] {
    [q.dx(1), q.dx(0).scale(-1.0)]
}

/// `sin(k x₁) sin(k x₂)` as a spatial factor.
pub fn sin_sin(k: f64) -> Space {
    Space::trig([k, k, 0.0], [0.0, 0.0, FRAC_PI_2])
}

/// `(1 − |x−c|²/ρ²)^n` on the disc or ball of radius ρ, expanded in monomials.
pub fn radial_bump(center: [f64; 3], radius: f64, power: u32, dim: usize) -> Space {
    let inv = 1.0 / (radius * radius);
    // 1 − u as a monomial list
    let mut base = vec![Mono { c: 1.0, e: [0; 3] }];
    for a in 0..dim {
        let mut e = [0; 3];
        e[a] = 2;
        base.push(Mono { c: -inv, e });
    }
    let mut monos = vec![Mono { c: 1.0, e: [0; 3] }];
    for _ in 0..power {
        monos = mono_mul(&monos, &base);
    }
    Space::Clipped { center, radius, monos }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::expr::{curl, divergence};

    fn fd_check(f: &StField, x: [f64; 3], t: f64) {
        let h = 1e-5;
        for a in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[a] += h;
            xm[a] -= h;
            let fd = (f.eval(&xp, t) - f.eval(&xm, t)) / (2.0 * h);
            let ex = f.dx(a).eval(&x, t);
            assert!((fd - ex).abs() < 1e-6 * (1.0 + ex.abs()), "axis {a}: {fd} vs {ex}");
        }
        let fd = (f.eval(&x, t + h) - f.eval(&x, t - h)) / (2.0 * h);
        let ex = f.dt().eval(&x, t);
        assert!((fd - ex).abs() < 1e-6 * (1.0 + ex.abs()), "time: {fd} vs {ex}");
    }

    #[test]
    fn derivatives_match_differences() {
        let f = StField::term(1.3, sin_sin(2.0), Time::exp(-0.7))
            .add(&StField::term(0.4, radial_bump([0.5, 0.5, 0.0], 0.4, 5, 2), Time::poly(0.5, vec![1.0, -2.0, 3.0])))
            .add(&StField::term(
                -2.0,
                Space::Poly { center: [0.1, 0.0, 0.0], monos: vec![Mono { c: 1.0, e: [2, 1, 0] }] },
                Time { t_ref: 0.3, poly: vec![0.5, 1.0], rate: 1.5 },
            ));
        fd_check(&f, [0.45, 0.62, 0.0], 0.55);
        fd_check(&f.dx(0).dx(1), [0.3, 0.41, 0.0], 0.2);
    }

    #[test]
    fn bump_vanishes_outside_and_is_one_at_centre() {
        let b = radial_bump([0.5, 0.5, 0.0], 0.3, 8, 2);
        assert!((b.eval(&[0.5, 0.5, 0.0]) - 1.0).abs() < 1e-14);
        assert_eq!(b.eval(&[0.9, 0.5, 0.0]), 0.0);
        // (1 − u)^8 at u = 1/4
        let x = [0.5 + 0.15, 0.5, 0.0];
        assert!((b.eval(&x) - 0.75f64.powi(8)).abs() < 1e-13);
    }

    #[test]
    fn perp_grad_is_divergence_free() {
        let q = StField::term(1.0, sin_sin(3.0), Time::exp(-1.0))
            .add(&StField::term(2.0, radial_bump([0.4, 0.6, 0.0], 0.3, 6, 2), Time::constant()));
        let v = perp_grad(&q);
        let div = divergence(&v);
        for x in [[0.3, 0.7, 0.0], [0.5, 0.5, 0.0], [0.1, 0.9, 0.0]] {
            assert!(div.eval(&x, 0.4).abs() < 1e-10);
        }
        // curl of ∇^⊥q is −Δq
        let z = curl(&v).remove(0);
        let lap = q.laplacian(2);
        let x = [0.42, 0.55, 0.0];
        assert!((z.eval(&x, 0.2) + lap.eval(&x, 0.2)).abs() < 1e-9);
    }

    #[test]
    fn time_product_and_freeze() {
        let a = Time::poly(0.5, vec![1.0, 2.0]);
        let b = Time { t_ref: 0.5, poly: vec![0.0, 1.0], rate: 0.3 };
        let ab = a.mul(&b);
        assert!((ab.eval(0.8) - a.eval(0.8) * b.eval(0.8)).abs() < 1e-14);
        let f = StField::term(2.0, sin_sin(1.0), a);
        let g = f.at_time(0.7);
        assert!((g.eval(&[0.2, 0.3, 0.0], 99.0) - f.eval(&[0.2, 0.3, 0.0], 0.7)).abs() < 1e-14);
    }
}
