//! Consistency of the space-time elliptic estimate with its per-slice version.

use serde::Serialize;

use crate::carleman::report::{finite_or_str, CarlemanReport};
use crate::carleman::verify::{verify_elliptic_spacetime, verify_elliptic_slice};
use crate::error::Result;
use crate::forward::expr::Smooth;
use crate::geometry::domain::DomainSpec;
use crate::geometry::weight::WeightFunction;

/// Quadrature slack on the constant comparison.
pub const SLACK: f64 = 0.05;

#[derive(Debug, Clone, Serialize)]
pub struct SliceVerdict {
    /// e^{3λβδ²}
    pub factor: f64,
    pub c_spacetime: f64,
    /// max over slices of the per-slice Ĉ.
    pub c_slice: f64,
    pub constant_holds: bool,
    pub s0_spacetime: f64,
    /// max over slices of the per-slice ŝ₀.
    pub s1: f64,
    /// s₁ e^{λβδ²}
    pub s_star: f64,
    pub threshold_holds: bool,
    /// max_k ρ₂(s_k) / (e^{3λβδ²} max_n ρ₃ₙ(s̃ₙₖ)); at most 1 by the slice argument.
    pub pointwise_ratio: f64,
    pub holds: bool,
}

/// Compares a space-time report with per-slice reports computed at s̃ = s e^{−λβ(t−t₀)²}.
pub fn slice_consistency(slices: &[CarlemanReport], spacetime: &CarlemanReport, weight: &WeightFunction) -> SliceVerdict {
    let lbd = weight.lambda * weight.beta * weight.delta * weight.delta;
    let factor = (3.0 * lbd).exp();
    let c3 = slices.iter().map(|r| r.c_hat).fold(0.0, f64::max);
    let s1 = slices.iter().map(|r| r.s0_hat).fold(0.0, f64::max);
    let s_star = s1 * lbd.exp();
    let mut pointwise: f64 = 0.0;
    for k in 0..spacetime.s.len() {
        let m = slices.iter().map(|r| r.rho[k]).fold(0.0, f64::max);
        if m > 0.0 {
            pointwise = pointwise.max(spacetime.rho[k] / (factor * m));
        } else if spacetime.rho[k] > 0.0 {
            pointwise = f64::INFINITY;
        }
    }
    let constant_holds = spacetime.c_hat <= (1.0 + SLACK) * c3 * factor;
    let threshold_holds = spacetime.s0_hat <= s_star * (1.0 + 1e-12);
    SliceVerdict {
        factor,
        c_spacetime: spacetime.c_hat,
        c_slice: c3,
        constant_holds,
        s0_spacetime: spacetime.s0_hat,
        s1,
        s_star,
        threshold_holds,
        pointwise_ratio: pointwise,
        holds: constant_holds && threshold_holds && pointwise <= 1.0 + SLACK,
    }
}

impl SliceVerdict {
    pub fn summary(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).unwrap_or_default();
        v["pointwise_ratio"] = finite_or_str(self.pointwise_ratio);
        v
    }
}

/// Runs both estimates on `r` and compares them.
pub fn run_slice_check<S: Smooth>(
    r: &[S],
    domain: &DomainSpec,
    weight: &WeightFunction,
    s_grid: &[f64],
) -> Result<(SliceVerdict, CarlemanReport, Vec<CarlemanReport>)> {
    let l2 = verify_elliptic_spacetime(r, domain, weight, s_grid)?;
    let slices = (0..domain.time.n)
        .map(|n| {
            let t = domain.time.time(n);
            let dt = t - weight.t0;
            let shrink = (-weight.lambda * weight.beta * dt * dt).exp();
            let st: Vec<f64> = s_grid.iter().map(|s| s * shrink).collect();
            verify_elliptic_slice(r, t, domain, weight, &st)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((slice_consistency(&slices, &l2, weight), l2, slices))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carleman::default_weight;
    use crate::carleman::report::default_s_grid;
    use crate::forward::funcs::{sin_sin, StField, Time};
    use crate::geometry::domain::{build_domain, Preset, TimeSpec};

    fn field() -> Vec<StField> {
        vec![StField::term(1.0, sin_sin(2.0), Time::poly(0.5, vec![1.0, 1.0]))]
    }

    #[test]
    fn relation_holds_and_beta_zero_coincides() {
        let d = build_domain(Preset::Rect2dRightEdge, 16, TimeSpec::default()).unwrap();
        let w = default_weight(&d, 2.0, 1.0).unwrap();
        let (v, _, _) = run_slice_check(&field(), &d, &w, &default_s_grid()).unwrap();
        assert!(v.holds, "{v:?}");
        let (v0, l2, slices) = run_slice_check(&field(), &d, &w.with_beta(0.0), &default_s_grid()).unwrap();
        assert_eq!(v0.factor, 1.0);
        assert!((v0.c_spacetime - v0.c_slice).abs() <= 0.01 * v0.c_slice);
        assert!(slices.iter().all(|s| s.rho_difference(&l2) < 1e-9));
    }

    #[test]
    fn factor_is_eight_at_ln2() {
        let d = build_domain(Preset::Rect2dRightEdge, 8, TimeSpec::default()).unwrap();
        let w = default_weight(&d, 2.0, 1.0).unwrap();
        let beta = 2f64.ln() / (w.lambda * w.delta * w.delta);
        let dummy = CarlemanReport::assemble("x", vec![1.0], vec![0.0], vec![], vec![]).unwrap();
        let v = slice_consistency(&[dummy.clone()], &dummy, &w.with_beta(beta));
        assert!((v.factor - 8.0).abs() < 1e-12);
    }
}
