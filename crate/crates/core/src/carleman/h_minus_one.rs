//! The H⁻¹ estimate for Δ with the time-independent weight φ₀ = e^{λη}.

use serde::Serialize;

use crate::carleman::report::CarlemanReport;
use crate::carleman::verify::{evaluate, Integral, Quadrature, Region};
use crate::error::{Error, Result};
use crate::fields::grid::Grid;
use crate::forward::funcs::StField;
use crate::geometry::domain::{Ball, DomainSpec};
use crate::geometry::weight::Profile;

/// Relative size of boundary values still treated as zero.
const SUPPORT_TOL: f64 = 1e-10;

/// E = Ω inside Ẽ = Ω₁ with the opening ω ⊂ Ẽ ∖ Ē and η the domain profile.
#[derive(Debug, Clone, Serialize)]
pub struct StaticWeight {
    pub lambda: f64,
    pub profile: Profile,
    pub opening: Ball,
    #[serde(skip)]
    pub e_grid: Grid,
    #[serde(skip)]
    pub outer: Grid,
    pub max_outer_boundary_eta: f64,
    pub min_interior_eta: f64,
    /// min |∇η| over Ẽ nodes outside ω and off the corners of Ẽ.
    pub min_gradient_outside_opening: f64,
    /// Corner nodes of Ẽ where a product profile is necessarily critical.
    pub corner_nodes: usize,
    pub conditions_hold: bool,
}

impl StaticWeight {
    pub fn new(domain: &DomainSpec, lambda: f64) -> Result<Self> {
        let dim = domain.dim();
        let profile = Profile::for_domain(domain);
        let outer = domain.outer_grid()?;
        let mut max_bdry: f64 = 0.0;
        let mut min_int = f64::INFINITY;
        let mut min_grad = f64::INFINITY;
        let mut corners = 0;
        for i in 0..outer.len() {
            let x = outer.coords(i);
            let eta = profile.value(&x[..dim]);
            if outer.is_boundary(i) {
                max_bdry = max_bdry.max(eta.abs());
            } else {
                min_int = min_int.min(eta);
            }
            if domain.opening.contains(&x[..dim]) {
                continue;
            }
            if profile.vanishing_factors(&x[..dim]) >= 2 {
                corners += 1;
                continue;
            }
            let g = profile.gradient(&x[..dim]);
            min_grad = min_grad.min(g.iter().map(|v| v * v).sum::<f64>().sqrt());
        }
        let h = outer.h();
        let conditions_hold = max_bdry <= 10.0 * h * h && min_int > 0.0 && min_grad > 0.0;
        if !conditions_hold {
            return Err(Error::ProfileInvariant(format!(
                "eta: boundary max {max_bdry:e}, interior min {min_int:e}, gradient min {min_grad:e}"
            )));
        }
        Ok(Self {
            lambda,
            profile,
            opening: domain.opening.clone(),
            e_grid: domain.grid.clone(),
            outer,
            max_outer_boundary_eta: max_bdry,
            min_interior_eta: min_int,
            min_gradient_outside_opening: min_grad,
            corner_nodes: corners,
            conditions_hold,
        })
    }

    pub fn phi0_on(&self, grid: &Grid) -> Vec<f64> {
        let dim = grid.dim();
        (0..grid.len()).map(|i| (self.lambda * self.profile.value(&grid.coords(i)[..dim])).exp()).collect()
    }
}

/// Checks `∫_E (|∇w|² + s²|w|²)e^{2sφ₀} ≤ C s Σ_j ∫_E |g_j|² e^{2sφ₀}`; `g` defaults to ∇w.
pub fn verify_h_minus_one(w: &StField, g: Option<&[StField]>, weight: &StaticWeight, s_grid: &[f64]) -> Result<CarlemanReport> {
    let grid = &weight.e_grid;
    let dim = grid.dim();
    let gw: Vec<StField> = (0..dim).map(|j| w.dx(j)).collect();
    let g = g.map(|g| g.to_vec()).unwrap_or_else(|| gw.clone());
    if g.len() != dim {
        return Err(Error::ShapeMismatch(format!("{} components in the decomposition, expected {dim}", g.len())));
    }
    let q = Quadrature::slice(grid, 0.0, weight.phi0_on(grid));
    let sq_w = q.sq(std::slice::from_ref(w));
    let sq_gw = q.sq(&gw);
    let inner_max = sq_w[0].iter().cloned().fold(0.0, f64::max).sqrt();
    let edge_max = (0..grid.len())
        .filter(|&i| grid.is_boundary(i))
        .map(|i| sq_w[0][i].sqrt() + sq_gw[0][i].sqrt())
        .fold(0.0, f64::max);
    if edge_max > SUPPORT_TOL * inner_max.max(f64::MIN_POSITIVE) && edge_max > 0.0 {
        return Err(Error::NotCompactlySupported(edge_max));
    }
    let lhs = vec![Integral::new("grad_w", 0, Region::Volume, sq_gw), Integral::new("w", 2, Region::Volume, sq_w)];
    let rhs = vec![Integral::new("g", 1, Region::Volume, q.sq(&g))];
    evaluate("h_minus_one", &q, &lhs, &rhs, s_grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carleman::report::default_s_grid;
    use crate::forward::funcs::{radial_bump, sin_sin, Time};
    use crate::geometry::domain::{build_domain, Preset, TimeSpec};

    fn weight() -> StaticWeight {
        let d = build_domain(Preset::Rect2dRightEdge, 24, TimeSpec::default()).unwrap();
        StaticWeight::new(&d, 2.0).unwrap()
    }

    #[test]
    fn weight_conditions_hold() {
        let w = weight();
        assert!(w.conditions_hold && w.min_gradient_outside_opening > 0.0);
        assert!(w.phi0_on(&w.e_grid).iter().all(|p| *p >= 1.0));
    }

    #[test]
    fn zero_and_scaling() {
        let w = weight();
        let z = verify_h_minus_one(&StField::zero(), None, &w, &default_s_grid()).unwrap();
        assert!(z.trivial);
        let b = StField::term(1.0, radial_bump([0.5, 0.5, 0.0], 0.3, 3, 2), Time::constant());
        let a = verify_h_minus_one(&b, None, &w, &default_s_grid()).unwrap();
        let c = verify_h_minus_one(&b.scale(1e3), None, &w, &default_s_grid()).unwrap();
        assert!(a.rho_difference(&c) < 1e-10, "{:?} {:?} {:?}", a.rho, c.rho, a.offsets);
        assert!(a.rho.iter().all(|r| r.is_finite() && *r > 0.0));
    }

    #[test]
    fn rejects_fields_alive_on_the_boundary() {
        let w = weight();
        let f = StField::term(1.0, sin_sin(1.0), Time::constant());
        assert!(matches!(verify_h_minus_one(&f, None, &w, &default_s_grid()), Err(Error::NotCompactlySupported(_))));
    }
}
