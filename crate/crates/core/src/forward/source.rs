//! Source families for the inverse problem and the gradient obstruction.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::grid::Grid;
use crate::forward::expr::{curl, divergence, Expr, Smooth};
use crate::forward::funcs::{perp_grad, radial_bump, Space, StField, Time};
use crate::forward::solution::{CoefficientFields, ManufacturedSolution};

/// Parameters of a source family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SourceSpec {
    /// `F = ∇^⊥q` with `q = Σ c sin(k₁x₁) sin(k₂x₂) e^{rate t}`.
    VectorPotential { modes: Vec<(f64, f64, f64)>, rate: f64 },
    /// `F = r(t) ∇^⊥(sin kx₁ sin kx₂)` with `r(t) = poly(t − t_ref)`.
    Separated { r: Vec<f64>, t_ref: f64, k: f64 },
    /// `F = R(x,t) f(x)` with explicit entries.
    Matrix { r: Vec<Vec<StField>>, f: Vec<StField>, c0: f64 },
    /// Compactly supported `F = ∇^⊥(τ₁b − τΔb)` with `b = (1−|x−c|²/ρ²)^power`,
    /// `τ = −1 + τ₁(t−t₀)`; `R(x,t)` is a scalar multiple of the identity with `R(t₀) = I`.
    RadialMatrix { center: [f64; 2], radius: f64, power: u32, tau1: f64 },
    /// Compactly supported `F = −e^{−κ(t−t₀)} ∇^⊥(κb + Δb)` driven by the stream `b e^{−κ(t−t₀)}`;
    /// `R(t) = e^{−κ(t−t₀)} I`.
    DecayingBump { center: [f64; 2], radius: f64, power: u32, kappa: f64 },
    /// `F = ∇ψ` with a compactly supported bump ψ.
    GradientObstruction { center: [f64; 3], radius: f64, power: u32, amplitude: f64 },
}

impl SourceSpec {
    pub fn family(&self) -> &'static str {
        match self {
            SourceSpec::VectorPotential { .. } => "vector_potential",
            SourceSpec::Separated { .. } => "separated",
            SourceSpec::Matrix { .. } => "matrix",
            SourceSpec::RadialMatrix { .. } => "radial_matrix",
            SourceSpec::DecayingBump { .. } => "decaying_bump",
            SourceSpec::GradientObstruction { .. } => "gradient_obstruction",
        }
    }

    /// The separated source with `r(t) = 1 + t²`.
    pub fn separated_default() -> Self {
        SourceSpec::Separated { r: vec![1.0, 0.0, 1.0], t_ref: 0.0, k: std::f64::consts::PI }
    }

    pub fn radial_default() -> Self {
        SourceSpec::RadialMatrix { center: [0.6, 0.5], radius: 0.3, power: 8, tau1: 1000.0 }
    }

    pub fn decaying_default() -> Self {
        SourceSpec::DecayingBump { center: [0.5, 0.5], radius: 0.4, power: 6, kappa: 2.0 }
    }

    pub fn obstruction_default(dim: usize) -> Self {
        let center = if dim == 3 { [0.5, 0.5, 0.5] } else { [0.5, 0.5, 0.0] };
        SourceSpec::GradientObstruction { center, radius: 0.3, power: 4, amplitude: 1.0 }
    }

    /// A matrix source with `det R(·,t₀) ≥ 3` on the unit square.
    pub fn matrix_default() -> Self {
        let pi = std::f64::consts::PI;
        let h = std::f64::consts::FRAC_PI_2;
        let c = |v: f64| StField::term(v, Space::one(), Time::constant());
        let r11 = c(2.0).add(&StField::term(0.3, Space::trig([pi, 0.0, 0.0], [0.0, h, h]), Time::poly(0.5, vec![1.0, 1.0])));
        let r12 = StField::term(0.2, Space::trig([0.0, pi, 0.0], [h, 0.0, h]), Time::poly(0.5, vec![0.0, 1.0]));
        let r21 = StField::term(0.1, Space::trig([0.0, 0.0, 0.0], [h, h, h]), Time::poly(0.5, vec![0.0, 0.0, 1.0]));
        let r22 = c(2.0).add(&StField::term(0.25, Space::trig([pi, pi, 0.0], [0.0, h, h]), Time::exp(1.0)));
        let q = StField::term(1.0 / pi, crate::forward::funcs::sin_sin(pi), Time::constant())
            .add(&StField::term(0.05, Space::trig([2.0 * pi, pi, 0.0], [0.3, 0.0, h]), Time::constant()));
        SourceSpec::Matrix { r: vec![vec![r11, r12], vec![r21, r22]], f: perp_grad(&q).to_vec(), c0: 3.0 }
    }
}

/// A source with closed-form derivatives and, where the family allows it, a manufactured
/// solution whose forcing is exactly this source.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceModel {
    pub spec: SourceSpec,
    pub dim: usize,
    pub t0: f64,
    /// Components of F(x, t).
    pub f: Vec<Expr>,
    /// `f(x)` of the separated and matrix families.
    pub profile: Option<Vec<StField>>,
    pub companion: Option<ManufacturedSolution>,
    pub notes: Vec<String>,
}

fn poly_eval(c: &[f64], y: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * y + a)
}

/// Polynomial τ with `τ' + κτ = r` (all in powers of `t − t_ref`).
fn solve_first_order(r: &[f64], kappa: f64) -> Vec<f64> {
    let n = r.len();
    let mut tau = vec![0.0; n];
    for i in (0..n).rev() {
        let next = if i + 1 < n { (i + 1) as f64 * tau[i + 1] } else { 0.0 };
        tau[i] = (r[i] - next) / kappa;
    }
    tau
}

fn sample_points(grid: &Grid) -> impl Iterator<Item = [f64; 3]> + '_ {
    (0..grid.len()).map(|i| grid.coords(i))
}

/// Builds a source model and checks the family preconditions on the nodes of `grid`.
pub fn build_source(spec: &SourceSpec, t0: f64, grid: &Grid) -> Result<SourceModel> {
    let dim = grid.dim();
    let two_d = |name: &str| -> Result<()> {
        if dim != 2 {
            return Err(Error::InvalidSource(format!("{name} sources are implemented in 2D only")));
        }
        Ok(())
    };
    let mut notes = Vec::new();
    match spec {
        SourceSpec::VectorPotential { modes, rate } => {
            two_d("vector_potential")?;
            let mut q = StField::zero();
            let mut psi = StField::zero();
            for &(c, k1, k2) in modes {
                let s = Space::trig([k1, k2, 0.0], [0.0, 0.0, std::f64::consts::FRAC_PI_2]);
                let kappa = rate + k1 * k1 + k2 * k2;
                if kappa.abs() < 1e-12 {
                    return Err(Error::InvalidSource(format!("mode ({k1}, {k2}) resonates with rate {rate}")));
                }
                q = q.add(&StField::term(c, s.clone(), Time::exp(*rate)));
                psi = psi.add(&StField::term(c / kappa, s, Time::exp(*rate)));
            }
            let companion = ManufacturedSolution::from_stream("vector_potential", &psi, StField::zero(), CoefficientFields::zero(2));
            Ok(SourceModel {
                spec: spec.clone(),
                dim,
                t0,
                f: perp_grad(&q).iter().map(|c| Expr::from(c.clone())).collect(),
                profile: None,
                companion: Some(companion),
                notes,
            })
        }
        SourceSpec::Separated { r, t_ref, k } => {
            two_d("separated")?;
            if r.is_empty() || *k == 0.0 {
                return Err(Error::InvalidSource("separated source needs r and k != 0".into()));
            }
            let r0 = poly_eval(r, t0 - t_ref);
            if r0.abs() < 1e-12 {
                return Err(Error::InvalidSource(format!("r(t0) = {r0} vanishes")));
            }
            let base = crate::forward::funcs::sin_sin(*k);
            let phi = StField::term(1.0, base.clone(), Time::constant());
            let f = perp_grad(&phi).to_vec();
            let rt = Time::poly(*t_ref, r.clone());
            let tau = solve_first_order(r, 2.0 * k * k);
            let psi = StField::term(1.0, base, Time::poly(*t_ref, tau));
            let companion = ManufacturedSolution::from_stream("separated", &psi, StField::zero(), CoefficientFields::zero(2));
            Ok(SourceModel {
                spec: spec.clone(),
                dim,
                t0,
                f: f.iter().map(|c| Expr::from(c.times_time(&rt))).collect(),
                profile: Some(f),
                companion: Some(companion),
                notes,
            })
        }
        SourceSpec::Matrix { r, f, c0 } => {
            if r.len() != dim || r.iter().any(|row| row.len() != dim) || f.len() != dim {
                return Err(Error::InvalidSource(format!("matrix source needs a {dim}x{dim} R and {dim} components of f")));
            }
            let div_f = sample_points(grid).map(|x| divergence(f).eval(&x, t0).abs()).fold(0.0, f64::max);
            if div_f > 1e-9 {
                notes.push(format!("div f is not zero (max {div_f:.3e}); the divergence-free condition may fail"));
            }
            let min_det = sample_points(grid)
                .map(|x| {
                    let m: Vec<Vec<f64>> = r.iter().map(|row| row.iter().map(|e| e.eval(&x, t0)).collect()).collect();
                    det(&m).abs()
                })
                .fold(f64::INFINITY, f64::min);
            if !(min_det >= *c0) {
                return Err(Error::InvalidSource(format!("min |det R(x,t0)| = {min_det:.4e} is below c0 = {c0}")));
            }
            let comps = (0..dim)
                .map(|i| (0..dim).fold(Expr::default(), |acc, j| acc.plus(&Expr::product(&r[i][j], &f[j]))))
                .collect();
            Ok(SourceModel { spec: spec.clone(), dim, t0, f: comps, profile: Some(f.clone()), companion: None, notes })
        }
        SourceSpec::RadialMatrix { center, radius, power, tau1 } => {
            two_d("radial_matrix")?;
            if *power < 5 || *radius <= 0.0 {
                return Err(Error::InvalidSource("radial source needs power >= 5 and radius > 0".into()));
            }
            let kk = *power as f64;
            let rho2 = radius * radius;
            // R is smooth when g(u) = −τ₁(1−u)² + (4/ρ²)(k−1)(2 − ku) has no zero on [0, 1].
            let g = |u: f64| -tau1 * (1.0 - u).powi(2) + 4.0 / rho2 * (kk - 1.0) * (2.0 - kk * u);
            let (gmin, gmax) = (0..=1000).map(|i| g(i as f64 / 1000.0)).fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(v), b.max(v)));
            if gmin <= 0.0 && gmax >= 0.0 {
                return Err(Error::InvalidSource(format!(
                    "tau1 = {tau1} makes R(x,t) singular inside the support; increase tau1"
                )));
            }
            let c = [center[0], center[1], 0.0];
            let b = StField::term(1.0, radial_bump(c, *radius, *power, 2), Time::constant());
            for x in sample_points(grid) {
                let u = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)) / rho2;
                if u < 1.0 && grid.is_boundary(grid_index(grid, &x)) {
                    return Err(Error::InvalidSource("support of F(t0) touches the boundary".into()));
                }
            }
            let tau = Time::poly(t0, vec![-1.0, *tau1]);
            let psi = b.times_time(&tau);
            let companion = ManufacturedSolution::from_stream("radial_matrix", &psi, StField::zero(), CoefficientFields::zero(2));
            let f = companion.forcing();
            let profile = f.iter().map(|e| e.at_time(t0).linear).collect();
            Ok(SourceModel { spec: spec.clone(), dim, t0, f, profile: Some(profile), companion: Some(companion), notes })
        }
        SourceSpec::DecayingBump { center, radius, power, kappa } => {
            two_d("decaying_bump")?;
            if *power < 5 || *radius <= 0.0 {
                return Err(Error::InvalidSource("decaying bump needs power >= 5 and radius > 0".into()));
            }
            let c = [center[0], center[1], 0.0];
            for n in 0..grid.len() {
                let x = grid.coords(n);
                if (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) < radius * radius && grid.is_boundary(n) {
                    return Err(Error::InvalidSource("support of F(t0) touches the boundary".into()));
                }
            }
            let tau = Time { t_ref: t0, poly: vec![1.0], rate: -kappa };
            let psi = StField::term(1.0, radial_bump(c, *radius, *power, 2), tau);
            let companion = ManufacturedSolution::from_stream("decaying_bump", &psi, StField::zero(), CoefficientFields::zero(2));
            let f = companion.forcing();
            let profile = f.iter().map(|e| e.at_time(t0).linear).collect();
            Ok(SourceModel { spec: spec.clone(), dim, t0, f, profile: Some(profile), companion: Some(companion), notes })
        }
        SourceSpec::GradientObstruction { center, radius, power, amplitude } => {
            let psi = StField::term(*amplitude, radial_bump(*center, *radius, *power, dim), Time::constant());
            let companion = ManufacturedSolution::obstruction(psi, dim)?;
            let f = companion.forcing();
            notes.push("rot F vanishes identically; F is invisible to velocity data".into());
            Ok(SourceModel { spec: spec.clone(), dim, t0, f, profile: None, companion: Some(companion), notes })
        }
    }
}

fn grid_index(grid: &Grid, x: &[f64; 3]) -> usize {
    let mi: Vec<usize> = (0..grid.dim())
        .map(|a| ((x[a] - grid.origin[a]) / grid.spacing[a]).round() as usize)
        .collect();
    grid.flat_index(&mi)
}

pub(crate) fn det(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => f64::NAN,
    }
}

impl SourceModel {
    pub fn family(&self) -> &'static str {
        self.spec.family()
    }

    pub fn eval(&self, x: &[f64; 3], t: f64) -> Vec<f64> {
        self.f.iter().map(|c| c.eval(x, t)).collect()
    }

    pub fn dt(&self) -> Vec<Expr> {
        self.f.iter().map(|c| c.dt()).collect()
    }

    pub fn dt2(&self) -> Vec<Expr> {
        self.f.iter().map(|c| c.dt().dt()).collect()
    }

    pub fn rot(&self) -> Vec<Expr> {
        curl(&self.f)
    }

    pub fn div(&self) -> Expr {
        divergence(&self.f)
    }

    /// `∂ⱼFᵢ` as `grad[i][j]`.
    pub fn grad(&self) -> Vec<Vec<Expr>> {
        self.f.iter().map(|c| (0..self.dim).map(|j| c.dx(j)).collect()).collect()
    }

    /// `r(t)` of the separated family.
    pub fn separated_r(&self) -> Option<Time> {
        match &self.spec {
            SourceSpec::Separated { r, t_ref, .. } => Some(Time::poly(*t_ref, r.clone())),
            _ => None,
        }
    }

    /// `R(x, t)` of the matrix families.
    pub fn matrix_at(&self, x: &[f64; 3], t: f64) -> Option<Vec<Vec<f64>>> {
        match &self.spec {
            SourceSpec::Matrix { r, .. } => Some(r.iter().map(|row| row.iter().map(|e| e.eval(x, t)).collect()).collect()),
            SourceSpec::RadialMatrix { center, radius, power, tau1 } => {
                let kk = *power as f64;
                let u = ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)) / (radius * radius);
                let tau = -1.0 + tau1 * (t - self.t0);
                let l = 4.0 / (radius * radius) * (kk - 1.0) * (2.0 - kk * u);
                let ratio = (-tau1 * (1.0 - u).powi(2) - tau * l) / (-tau1 * (1.0 - u).powi(2) + l);
                Some(vec![vec![ratio, 0.0], vec![0.0, ratio]])
            }
            SourceSpec::DecayingBump { kappa, .. } => {
                let r = (-kappa * (t - self.t0)).exp();
                Some(vec![vec![r, 0.0], vec![0.0, r]])
            }
            _ => None,
        }
    }

    /// Largest discrepancy, relative to the largest sampled derivative, between the stored derivatives and central differences
    /// at `n` random points of the unit box.
    pub fn spot_check<R: Rng>(&self, rng: &mut R, n: usize, h: f64) -> f64 {
        let rot = self.rot();
        let dt = self.dt();
        let grad = self.grad();
        let mut worst = 0.0f64;
        let mut mag = 1e-300f64;
        for _ in 0..n {
            let mut x = [0.0; 3];
            for xa in x.iter_mut().take(self.dim) {
                *xa = rng.random_range(0.05..0.95);
            }
            let t = self.t0 + rng.random_range(-0.1..0.1);
            let mut num_rot = 0.0;
            let mut fd_grad = vec![vec![0.0; self.dim]; self.dim];
            for j in 0..self.dim {
                let mut xp = x;
                let mut xm = x;
                xp[j] += h;
                xm[j] -= h;
                let fp = self.eval(&xp, t);
                let fm = self.eval(&xm, t);
                for i in 0..self.dim {
                    fd_grad[i][j] = (fp[i] - fm[i]) / (2.0 * h);
                }
            }
            if self.dim == 2 {
                num_rot = fd_grad[1][0] - fd_grad[0][1];
            }
            let fp = self.eval(&x, t + h);
            let fm = self.eval(&x, t - h);
            let mut err = 0.0f64;
            for i in 0..self.dim {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                let ex = dt[i].eval(&x, t);
                err = err.max((fd - ex).abs());
                mag = mag.max(ex.abs());
                for j in 0..self.dim {
                    let ex = grad[i][j].eval(&x, t);
                    err = err.max((fd_grad[i][j] - ex).abs());
                    mag = mag.max(ex.abs());
                }
            }
            if self.dim == 2 {
                err = err.max((num_rot - rot[0].eval(&x, t)).abs());
            }
            worst = worst.max(err);
        }
        worst / mag
    }
}

/// A random source from a family where rot dominance implies source dominance: separated, single-rate
/// vector potential, or a matrix family with dominant diagonal.
pub fn random_source<R: Rng>(rng: &mut R, t0: f64, grid: &Grid) -> Result<SourceModel> {
    let pi = std::f64::consts::PI;
    let spec = match rng.random_range(0..3) {
        0 => {
            let mut r = vec![rng.random_range(0.5..2.0)];
            r.push(rng.random_range(-1.0..1.0));
            r.push(rng.random_range(-1.0..1.0));
            SourceSpec::Separated { r, t_ref: t0, k: pi * rng.random_range(1..=3) as f64 }
        }
        1 => {
            let k1 = pi * rng.random_range(1..=2) as f64;
            let k2 = pi * rng.random_range(1..=2) as f64;
            SourceSpec::VectorPotential { modes: vec![(rng.random_range(0.5..2.0), k1, k2)], rate: rng.random_range(-2.0..0.0) }
        }
        _ => {
            let c = |v: f64| StField::term(v, Space::one(), Time::constant());
            let h = std::f64::consts::FRAC_PI_2;
            let pert = |rng: &mut R| {
                StField::term(
                    rng.random_range(-0.3..0.3),
                    Space::trig([pi * rng.random_range(0..3) as f64, pi * rng.random_range(0..3) as f64, 0.0], [h, h, h]),
                    Time::poly(t0, vec![1.0, rng.random_range(-1.0..1.0)]),
                )
            };
            let r = vec![vec![c(2.0).add(&pert(rng)), pert(rng)], vec![pert(rng), c(2.0).add(&pert(rng))]];
            let q = StField::term(1.0, crate::forward::funcs::sin_sin(pi * rng.random_range(1..=2) as f64), Time::constant());
            SourceSpec::Matrix { r, f: perp_grad(&q).to_vec(), c0: 0.5 }
        }
    };
    build_source(&spec, t0, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Grid {
        Grid::new_box(&[0.0, 0.0], &[1.0, 1.0], &[16, 16]).unwrap()
    }

    #[test]
    fn companion_forcing_equals_source() {
        let specs = [
            SourceSpec::separated_default(),
            SourceSpec::radial_default(),
            SourceSpec::VectorPotential { modes: vec![(1.0, 3.0, 2.0), (0.5, 1.0, 4.0)], rate: -0.5 },
            SourceSpec::obstruction_default(2),
        ];
        for spec in &specs {
            let s = build_source(spec, 0.5, &grid()).unwrap();
            let comp = s.companion.as_ref().unwrap();
            for x in [[0.31, 0.47, 0.0], [0.62, 0.55, 0.0], [0.9, 0.1, 0.0]] {
                for t in [0.42, 0.5, 0.57] {
                    let r = comp.momentum_residual(&s.f, &x, t);
                    let m = s.eval(&x, t).iter().fold(1.0f64, |a, b| a.max(b.abs()));
                    assert!(r < 1e-10 * m, "{} residual {r}", s.family());
                }
            }
        }
    }

    #[test]
    fn separated_source_is_r_times_f() {
        let s = build_source(&SourceSpec::separated_default(), 0.5, &grid()).unwrap();
        let f = s.profile.as_ref().unwrap();
        let x = [0.3, 0.7, 0.0];
        let t = 0.55;
        let r = 1.0 + t * t;
        assert!((s.eval(&x, t)[0] - r * f[0].eval(&x, 0.0)).abs() < 1e-12);
        assert!(s.div().eval(&x, 0.5).abs() < 1e-12);
    }

    #[test]
    fn vanishing_r_rejected() {
        let spec = SourceSpec::Separated { r: vec![0.0, 1.0], t_ref: 0.5, k: 3.0 };
        assert!(matches!(build_source(&spec, 0.5, &grid()), Err(Error::InvalidSource(_))));
    }

    #[test]
    fn singular_matrix_rejected() {
        let SourceSpec::Matrix { r, f, .. } = SourceSpec::matrix_default() else { unreachable!() };
        let spec = SourceSpec::Matrix { r: vec![r[0].clone(), r[0].clone()], f, c0: 0.1 };
        assert!(matches!(build_source(&spec, 0.5, &grid()), Err(Error::InvalidSource(_))));
    }

    #[test]
    fn obstruction_has_no_rotation() {
        let s = build_source(&SourceSpec::obstruction_default(2), 0.5, &grid()).unwrap();
        let rot = s.rot();
        for x in [[0.5, 0.5, 0.0], [0.6, 0.4, 0.0]] {
            assert!(rot[0].eval(&x, 0.5).abs() < 1e-10);
        }
    }

    #[test]
    fn radial_matrix_factorization() {
        let s = build_source(&SourceSpec::radial_default(), 0.5, &grid()).unwrap();
        let f = s.profile.as_ref().unwrap();
        for x in [[0.55, 0.52, 0.0], [0.7, 0.4, 0.0], [0.75, 0.66, 0.0]] {
            for t in [0.4, 0.5, 0.6] {
                let r = s.matrix_at(&x, t).unwrap();
                let fx = [f[0].eval(&x, 0.0), f[1].eval(&x, 0.0)];
                let ft = s.eval(&x, t);
                for i in 0..2 {
                    let rf = r[i][0] * fx[0] + r[i][1] * fx[1];
                    assert!((rf - ft[i]).abs() < 1e-8 * (1.0 + ft[i].abs()), "{rf} vs {}", ft[i]);
                }
            }
        }
        let r0 = s.matrix_at(&[0.6, 0.5, 0.0], 0.5).unwrap();
        assert!((r0[0][0] - 1.0).abs() < 1e-12);
        let low = SourceSpec::RadialMatrix { center: [0.6, 0.5], radius: 0.3, power: 8, tau1: 100.0 };
        assert!(build_source(&low, 0.5, &grid()).is_err());
    }

    #[test]
    fn stored_derivatives_agree_with_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for spec in [SourceSpec::separated_default(), SourceSpec::matrix_default(), SourceSpec::radial_default()] {
            let s = build_source(&spec, 0.5, &grid()).unwrap();
            let e = s.spot_check(&mut rng, 100, 1e-4);
            assert!(e < 1e-5, "{}: {e}", s.family());
        }
    }

    #[test]
    fn random_sources_build() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            random_source(&mut rng, 0.5, &grid()).unwrap();
        }
    }
}
