use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::grid::Grid;
use crate::geometry::domain::{DomainSpec, Preset};

/// One factor `x(L−x)e^{κx}` of the product profile, shifted to start at `lo`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisFactor {
    pub lo: f64,
    pub len: f64,
    pub kappa: f64,
}

impl AxisFactor {
    /// Factor on `[lo, lo+len]` whose only critical point is `lo + c`.
    pub fn with_peak(lo: f64, len: f64, c: f64) -> Self {
        Self { lo, len, kappa: (2.0 * c - len) / (c * (len - c)) }
    }

    pub fn value(&self, x: f64) -> f64 {
        let y = x - self.lo;
        y * (self.len - y) * (self.kappa * y).exp()
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let y = x - self.lo;
        (self.kappa * y).exp() * (self.kappa * y * (self.len - y) + self.len - 2.0 * y)
    }

    pub fn second(&self, x: f64) -> f64 {
        let y = x - self.lo;
        let k = self.kappa;
        (k * y).exp() * (k * k * y * (self.len - y) + 2.0 * k * (self.len - 2.0 * y) - 2.0)
    }
}

/// Closed-form profile `d(x) = Π_a g_a(x_a) / max d` on the box Ω₁.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub factors: Vec<AxisFactor>,
    pub scale: f64,
}

impl Profile {
    /// Profile vanishing on ∂Ω₁ with its unique critical point at the centre of ω.
    pub fn for_domain(domain: &DomainSpec) -> Self {
        let factors: Vec<AxisFactor> = (0..domain.dim())
            .map(|a| {
                let lo = domain.outer.lo[a];
                AxisFactor::with_peak(lo, domain.outer.hi[a] - lo, domain.opening.center[a] - lo)
            })
            .collect();
        let peak: f64 = factors.iter().zip(&domain.opening.center).map(|(f, c)| f.value(*c)).product();
        Self { factors, scale: 1.0 / peak }
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.scale * self.factors.iter().zip(x).map(|(f, v)| f.value(*v)).product::<f64>()
    }

    pub fn gradient(&self, x: &[f64]) -> [f64; 3] {
        let mut g = [0.0; 3];
        for (a, ga) in g.iter_mut().enumerate().take(self.dim()) {
            *ga = self.scale
                * self
                    .factors
                    .iter()
                    .enumerate()
                    .map(|(b, f)| if a == b { f.deriv(x[b]) } else { f.value(x[b]) })
                    .product::<f64>();
        }
        g
    }

    pub fn laplacian(&self, x: &[f64]) -> f64 {
        (0..self.dim())
            .map(|a| {
                self.scale
                    * self
                        .factors
                        .iter()
                        .enumerate()
                        .map(|(b, f)| if a == b { f.second(x[b]) } else { f.value(x[b]) })
                        .product::<f64>()
            })
            .sum()
    }

    /// Number of factors vanishing at `x`, to rounding.
    pub fn vanishing_factors(&self, x: &[f64]) -> usize {
        self.factors.iter().zip(x).filter(|(f, v)| f.value(**v).abs() < 1e-12).count()
    }
}

/// Which power of the profile enters the exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PsiMode {
    /// ψ = d
    Linear,
    /// ψ = d²
    #[default]
    Squared,
}

/// φ(x,t) = exp(λ(ψ(x) − β(t−t₀)²)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightFunction {
    pub profile: Profile,
    pub lambda: f64,
    pub beta: f64,
    pub t0: f64,
    pub delta: f64,
    pub psi_mode: PsiMode,
}

impl WeightFunction {
    pub fn new(profile: Profile, lambda: f64, beta: f64, t0: f64, delta: f64, psi_mode: PsiMode) -> Self {
        Self { profile, lambda, beta, t0, delta, psi_mode }
    }

    pub fn psi(&self, x: &[f64]) -> f64 {
        let d = self.profile.value(x);
        match self.psi_mode {
            PsiMode::Linear => d,
            PsiMode::Squared => d * d,
        }
    }

    pub fn psi_gradient(&self, x: &[f64]) -> [f64; 3] {
        let g = self.profile.gradient(x);
        match self.psi_mode {
            PsiMode::Linear => g,
            PsiMode::Squared => {
                let d = self.profile.value(x);
                [2.0 * d * g[0], 2.0 * d * g[1], 2.0 * d * g[2]]
            }
        }
    }

    pub fn phi(&self, x: &[f64], t: f64) -> f64 {
        let dt = t - self.t0;
        (self.lambda * (self.psi(x) - self.beta * dt * dt)).exp()
    }

    /// φ(·, t) at every node of `grid`.
    pub fn phi_on(&self, grid: &Grid, t: f64) -> Vec<f64> {
        let dim = grid.dim();
        (0..grid.len()).map(|i| self.phi(&grid.coords(i)[..dim], t)).collect()
    }

    pub fn psi_on(&self, grid: &Grid) -> Vec<f64> {
        let dim = grid.dim();
        (0..grid.len()).map(|i| self.psi(&grid.coords(i)[..dim])).collect()
    }

    /// max over the grid of φ, attained at t = t₀.
    pub fn phi_max(&self, grid: &Grid) -> f64 {
        self.phi_on(grid, self.t0).into_iter().fold(f64::MIN, f64::max)
    }

    /// The same weight with β replaced.
    pub fn with_beta(&self, beta: f64) -> Self {
        Self { beta, ..self.clone() }
    }

    pub fn to_json(&self, domain: &DomainSpec) -> serde_json::Value {
        serde_json::json!({
            "preset": domain.preset.id(),
            "h": domain.grid.spacing,
            "lambda": self.lambda,
            "beta": self.beta,
            "t0": self.t0,
            "delta": self.delta,
            "psi_mode": self.psi_mode,
            "profile": self.profile,
        })
    }
}

/// Grid scan of the profile conditions on Ω̄₁ and Ω̄.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileReport {
    pub min_interior_value: f64,
    pub max_outer_boundary_value: f64,
    /// min |∇d| over Ω̄₁ nodes outside ω, excluding the degenerate set.
    pub min_gradient_outside_opening: f64,
    /// min |∇d| over Ω̄ nodes, excluding the degenerate set.
    pub min_gradient_on_omega: f64,
    pub max_hidden_boundary_value: f64,
    /// min of d over Γ nodes not touching ∂Ω∖Γ.
    pub min_gamma_value: f64,
    pub min_inner_value: f64,
    /// Nodes of Ω̄ where two or more faces of Ω₁ meet; every C¹ function vanishing on ∂Ω₁ is critical there.
    pub degenerate_nodes: Vec<[f64; 3]>,
    /// Nodes (coordinates) with |∇d| = 0 outside ω and outside the degenerate set.
    pub violations: Vec<[f64; 3]>,
}

pub fn check_profile(domain: &DomainSpec, profile: &Profile) -> Result<ProfileReport> {
    let dim = domain.dim();
    let outer = domain.outer_grid()?;
    let mut min_interior = f64::INFINITY;
    let mut max_outer_bdry: f64 = 0.0;
    let mut min_grad_outside = f64::INFINITY;
    let mut violations = Vec::new();
    for i in 0..outer.len() {
        let x = outer.coords(i);
        let d = profile.value(&x[..dim]);
        if outer.is_boundary(i) {
            max_outer_bdry = max_outer_bdry.max(d.abs());
        } else {
            min_interior = min_interior.min(d);
        }
        if domain.opening.contains(&x[..dim]) || profile.vanishing_factors(&x[..dim]) >= 2 {
            continue;
        }
        let g = profile.gradient(&x[..dim]);
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 0.0 {
            violations.push(x);
        }
        min_grad_outside = min_grad_outside.min(norm);
    }
    let grid = &domain.grid;
    let gm = domain.gamma_mask();
    let hidden = domain.hidden_boundary_mask();
    let hidden_faces = domain.hidden_faces();
    let mut min_grad_omega = f64::INFINITY;
    let mut max_hidden: f64 = 0.0;
    let mut min_gamma = f64::INFINITY;
    let mut min_inner = f64::INFINITY;
    let mut degenerate = Vec::new();
    for i in 0..grid.len() {
        let x = grid.coords(i);
        let d = profile.value(&x[..dim]);
        if profile.vanishing_factors(&x[..dim]) >= 2 {
            degenerate.push(x);
        } else {
            let g = profile.gradient(&x[..dim]);
            min_grad_omega = min_grad_omega.min(g.iter().map(|v| v * v).sum::<f64>().sqrt());
        }
        if hidden[i] {
            max_hidden = max_hidden.max(d.abs());
        }
        if gm[i] && !hidden_faces.iter().any(|f| grid.on_face(i, *f)) {
            min_gamma = min_gamma.min(d);
        }
        if domain.inner_mask[i] {
            min_inner = min_inner.min(d);
        }
    }
    let report = ProfileReport {
        min_interior_value: min_interior,
        max_outer_boundary_value: max_outer_bdry,
        min_gradient_outside_opening: min_grad_outside,
        min_gradient_on_omega: min_grad_omega,
        max_hidden_boundary_value: max_hidden,
        min_gamma_value: min_gamma,
        min_inner_value: min_inner,
        degenerate_nodes: degenerate,
        violations,
    };
    let h = domain.h();
    if !report.violations.is_empty() {
        return Err(Error::ProfileInvariant(format!(
            "|grad d| vanishes outside the opening at {:?}",
            report.violations
        )));
    }
    if report.min_interior_value <= 0.0 || report.min_inner_value <= 0.0 {
        return Err(Error::ProfileInvariant("d is not positive inside Omega_1".into()));
    }
    if report.max_outer_boundary_value > 10.0 * h * h || report.max_hidden_boundary_value > 10.0 * h * h {
        return Err(Error::ProfileInvariant("d does not vanish on the boundary of Omega_1".into()));
    }
    Ok(report)
}

/// Builds the closed-form profile for a preset and checks its invariants on the grid.
pub fn build_weight_profile(domain: &DomainSpec) -> Result<(Profile, ProfileReport)> {
    match domain.preset {
        Preset::Rect2dRightEdge | Preset::Rect2dCorner | Preset::Box3dFace => {
            let p = Profile::for_domain(domain);
            let report = check_profile(domain, &p)?;
            Ok((p, report))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::domain::{build_domain, TimeSpec};
    use proptest::prelude::*;

    fn right_edge() -> DomainSpec {
        build_domain(Preset::Rect2dRightEdge, 32, TimeSpec::default()).unwrap()
    }

    #[test]
    fn factor_derivatives_match_differences() {
        let f = AxisFactor::with_peak(0.0, 2.0, 1.2);
        assert!(f.deriv(1.2).abs() < 1e-14);
        let h = 1e-5;
        for x in [0.1, 0.7, 1.5, 1.9] {
            let fd = (f.value(x + h) - f.value(x - h)) / (2.0 * h);
            let fd2 = (f.value(x + h) - 2.0 * f.value(x) + f.value(x - h)) / (h * h);
            assert!((fd - f.deriv(x)).abs() < 1e-8);
            assert!((fd2 - f.second(x)).abs() < 1e-4);
        }
    }

    #[test]
    fn profile_conditions_hold_for_all_presets() {
        for p in Preset::ALL {
            let n = if p.dim() == 3 { 8 } else { 32 };
            let d = build_domain(p, n, TimeSpec::default()).unwrap();
            let (profile, rep) = build_weight_profile(&d).unwrap();
            assert!(rep.min_gamma_value > 0.0);
            assert!(rep.min_gradient_on_omega > 0.0);
            assert!(rep.max_hidden_boundary_value <= 10.0 * d.h() * d.h());
            // the maximum sits at the centre of the opening
            assert!((profile.value(&d.opening.center) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_set_is_the_corners_on_outer_boundary() {
        let (_, rep) = build_weight_profile(&right_edge()).unwrap();
        assert_eq!(rep.degenerate_nodes.len(), 2);
        for x in &rep.degenerate_nodes {
            assert_eq!(x[0], 0.0);
        }
    }

    #[test]
    fn phi_examples() {
        let d = right_edge();
        let w = WeightFunction::new(Profile::for_domain(&d), 1.0, 0.5, 0.0, 0.1, PsiMode::Squared);
        // ψ(x) = 1 at the peak
        let c = d.opening.center.clone();
        assert!((w.phi(&c, 1.0) - 0.5f64.exp()).abs() < 1e-12);
        assert!((w.phi(&c, 0.0) - (w.lambda * w.psi(&c)).exp()).abs() < 1e-12);
        let x = [0.3, 0.6];
        assert_eq!(w.phi(&x, 0.1), w.phi(&x, -0.1));
    }

    #[test]
    fn psi_gradient_matches_differences() {
        let d = right_edge();
        let w = WeightFunction::new(Profile::for_domain(&d), 2.0, 1.0, 0.5, 0.1, PsiMode::Squared);
        let x = [0.4, 0.3];
        let g = w.psi_gradient(&x);
        let h = 1e-6;
        let fd0 = (w.psi(&[x[0] + h, x[1]]) - w.psi(&[x[0] - h, x[1]])) / (2.0 * h);
        assert!((fd0 - g[0]).abs() < 1e-8);
    }

    proptest! {
        #[test]
        fn phi_monotone_in_time_and_psi(x0 in 0.05f64..0.95, x1 in 0.05f64..0.95, a in 0.0f64..0.1, b in 0.0f64..0.1) {
            let d = right_edge();
            let w = WeightFunction::new(Profile::for_domain(&d), 2.0, 3.0, 0.5, 0.1, PsiMode::Squared);
            let x = [x0, x1];
            let (near, far) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(far - near > 1e-6);
            prop_assert!(w.phi(&x, 0.5 + near) > w.phi(&x, 0.5 + far));
            prop_assert!(w.phi(&x, 0.5) >= w.phi(&x, 0.5 - far));
            // increasing in ψ at fixed t
            let y = [x0 * 0.5, x1];
            if w.psi(&y) < w.psi(&x) {
                prop_assert!(w.phi(&y, 0.5 + a) < w.phi(&x, 0.5 + a));
            }
        }
    }
}
