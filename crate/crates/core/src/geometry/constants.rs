use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::domain::DomainSpec;
use crate::geometry::weight::WeightFunction;

/// Choice of N, shrunken window ε̃ and enlarged window δ₂.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Windows {
    pub n: u32,
    pub eps_tilde: f64,
    pub delta2: f64,
}

/// How β and the μ's are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaMode {
    /// Continuation: β inside ((ψ₁−ψ₀)/(δ₂²−ε̃²), ψ₀/ε̃²).
    Continuation { eps_tilde: f64, delta2: f64 },
    /// Inverse source: β > (‖ψ‖ − ε₁)/δ².
    Source { eps1: f64, delta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaChoice {
    pub beta: f64,
    pub lower: f64,
    /// Infinite in the inverse-source mode.
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mus {
    pub mu1: f64,
    pub mu2: f64,
    pub mu0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityChoice {
    pub s: f64,
    pub theta: f64,
    pub bound: f64,
    /// True when D < M and s balances the two exponentials.
    pub balanced: bool,
}

/// All constants of one stability argument, as reported to users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityConstants {
    /// min of ψ over Ω̄₀.
    pub d0: f64,
    /// max of ψ over Ω̄.
    pub d1: f64,
    pub n: u32,
    pub eps: f64,
    pub eps_tilde: f64,
    pub delta2: f64,
    pub eps1: Option<f64>,
    pub beta: BetaChoice,
    pub mus: Mus,
    pub carleman_c: Option<f64>,
    pub theta: Option<f64>,
}

/// Smallest integer N with N > ψ₁/ψ₀, then ε̃ = ε/(N−1), δ₂ = Nε̃.
pub fn select_n_eps(eps: f64, d0: f64, d1: f64, horizon: f64) -> Result<Windows> {
    if !(eps > 0.0 && d0 > 0.0 && d0 <= d1) {
        return Err(Error::InvalidArgument(format!(
            "need eps > 0 and 0 < d0 <= d1, got eps={eps}, d0={d0}, d1={d1}"
        )));
    }
    let ratio = d1 / d0;
    let n = ((ratio.floor() as u32) + 1).max(2);
    let eps_tilde = eps / (n - 1) as f64;
    let delta2 = n as f64 * eps_tilde;
    if delta2 >= horizon / 2.0 {
        return Err(Error::EpsilonTooLarge { delta2, half_horizon: horizon / 2.0 });
    }
    Ok(Windows { n, eps_tilde, delta2 })
}

/// β at the midpoint of its admissible interval, or 1.5 times the threshold.
pub fn select_beta(d0: f64, d1: f64, mode: BetaMode) -> Result<BetaChoice> {
    match mode {
        BetaMode::Continuation { eps_tilde, delta2 } => {
            let lower = (d1 - d0) / (delta2 * delta2 - eps_tilde * eps_tilde);
            let upper = d0 / (eps_tilde * eps_tilde);
            if !(lower < upper) || delta2 <= eps_tilde {
                return Err(Error::EmptyBetaInterval { lower, upper });
            }
            Ok(BetaChoice { beta: 0.5 * (lower + upper), lower, upper })
        }
        BetaMode::Source { eps1, delta } => {
            let lower = (d1 - eps1) / (delta * delta);
            if lower <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "eps1 = {eps1} must be smaller than max psi = {d1}"
                )));
            }
            Ok(BetaChoice { beta: 1.5 * lower, lower, upper: f64::INFINITY })
        }
    }
}

/// μ₁, μ₂ and μ₀ = μ₁ − μ₂ for the given mode.
pub fn compute_mu(lambda: f64, d0: f64, d1: f64, beta: f64, mode: BetaMode) -> Result<Mus> {
    let (mu1, mu2) = match mode {
        BetaMode::Continuation { eps_tilde, delta2 } => (
            (lambda * (d0 - beta * eps_tilde * eps_tilde)).exp(),
            (lambda * (d1 - beta * delta2 * delta2)).exp().max(1.0),
        ),
        BetaMode::Source { eps1, delta } => {
            ((lambda * eps1).exp(), (lambda * (d1 - beta * delta * delta)).exp().max(1.0))
        }
    };
    let mu0 = mu1 - mu2;
    if mu0 <= 0.0 {
        return Err(Error::NonPositiveMu0(mu0));
    }
    Ok(Mus { mu1, mu2, mu0 })
}

/// Balances `M²e^{−sμ₀}` against `D²e^{Cs}` when D < M; otherwise s = 1.
pub fn select_s_and_theta(m: f64, d: f64, c: f64, mu0: f64) -> Result<StabilityChoice> {
    if !(m > 0.0 && d > 0.0 && c > 0.0 && mu0 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need M, D, C, mu0 > 0, got M={m}, D={d}, C={c}, mu0={mu0}"
        )));
    }
    let theta = mu0 / (c + mu0);
    if d < m {
        let s = 2.0 / (c + mu0) * (m / d).ln();
        let bound = 2.0 * c * m.powf(2.0 * c / (c + mu0)) * d.powf(2.0 * theta);
        Ok(StabilityChoice { s, theta, bound, balanced: true })
    } else {
        let bound = c * d * d * ((-mu0).exp() + c.exp());
        Ok(StabilityChoice { s: 1.0, theta, bound, balanced: false })
    }
}

/// ψ₀ = min over Ω̄₀ and ψ₁ = max over Ω̄ on the grid.
pub fn psi_extremes(domain: &DomainSpec, weight: &WeightFunction) -> (f64, f64) {
    let psi = weight.psi_on(&domain.grid);
    let d0 = psi
        .iter()
        .zip(&domain.inner_mask)
        .filter(|(_, m)| **m)
        .map(|(p, _)| *p)
        .fold(f64::INFINITY, f64::min);
    let d1 = psi.iter().cloned().fold(f64::MIN, f64::max);
    (d0, d1)
}

/// Full continuation chain: N, ε̃, δ₂, β and the μ's for the weight's profile.
pub fn continuation_constants(
    domain: &DomainSpec,
    weight: &WeightFunction,
    eps: f64,
) -> Result<StabilityConstants> {
    let (d0, d1) = psi_extremes(domain, weight);
    let w = select_n_eps(eps, d0, d1, domain.horizon)?;
    let mode = BetaMode::Continuation { eps_tilde: w.eps_tilde, delta2: w.delta2 };
    let beta = select_beta(d0, d1, mode)?;
    let mus = compute_mu(weight.lambda, d0, d1, beta.beta, mode)?;
    Ok(StabilityConstants {
        d0,
        d1,
        n: w.n,
        eps,
        eps_tilde: w.eps_tilde,
        delta2: w.delta2,
        eps1: None,
        beta,
        mus,
        carleman_c: None,
        theta: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn windows_worked_example() {
        let w = select_n_eps(4.0, 1.0, 4.0, 100.0).unwrap();
        assert_eq!(w.n, 5);
        assert_eq!(w.eps_tilde, 1.0);
        assert_eq!(w.delta2, 5.0);
        assert!((4.0 - 1.0) / (25.0 - 1.0) < 1.0 / 1.0);
    }

    #[test]
    fn equal_extremes_give_n_two() {
        let w = select_n_eps(0.1, 0.7, 0.7, 1.0).unwrap();
        assert_eq!(w.n, 2);
        assert!(w.delta2 > w.eps_tilde);
    }

    #[test]
    fn too_large_eps_rejected() {
        assert!(matches!(select_n_eps(4.0, 1.0, 4.0, 10.0), Err(Error::EpsilonTooLarge { .. })));
    }

    #[test]
    fn beta_worked_examples() {
        let b = select_beta(1.0, 4.0, BetaMode::Continuation { eps_tilde: 1.0, delta2: 5.0 }).unwrap();
        assert!((b.lower - 0.125).abs() < 1e-15 && (b.upper - 1.0).abs() < 1e-15);
        assert!((b.beta - 0.5625).abs() < 1e-15);
        let b3 = select_beta(0.0, 2.0, BetaMode::Source { eps1: 0.5, delta: 1.0 }).unwrap();
        assert!((b3.beta - 2.25).abs() < 1e-15);
        assert!(0.5 > 2.0 - b3.beta);
    }

    #[test]
    fn mu_worked_example() {
        let m = compute_mu(1.0, 1.0, 4.0, 0.5, BetaMode::Continuation { eps_tilde: 1.0, delta2: 5.0 })
            .unwrap();
        assert!((m.mu1 - 0.5f64.exp()).abs() < 1e-12);
        assert_eq!(m.mu2, 1.0);
        assert!((m.mu0 - 0.648_721_270_700_128_1).abs() < 1e-12);
    }

    #[test]
    fn zero_mu0_rejected() {
        let r = compute_mu(1.0, 0.0, 0.5, 2.0, BetaMode::Source { eps1: 0.0, delta: 1.0 });
        assert!(matches!(r, Err(Error::NonPositiveMu0(_))));
    }

    #[test]
    fn doubling_lambda_increases_mu0() {
        let mode = BetaMode::Continuation { eps_tilde: 1.0, delta2: 5.0 };
        let a = compute_mu(1.0, 1.0, 4.0, 0.5, mode).unwrap();
        let b = compute_mu(2.0, 1.0, 4.0, 0.5, mode).unwrap();
        assert!(b.mu0 > a.mu0);
    }

    #[test]
    fn s_theta_worked_examples() {
        let (c, mu0): (f64, f64) = (1.3, 0.7);
        let r = select_s_and_theta(1.0, (-(c + mu0) as f64).exp(), c, mu0).unwrap();
        assert!((r.s - 2.0).abs() < 1e-12);
        let eq = select_s_and_theta(2.0, 2.0, c, mu0).unwrap();
        assert_eq!(eq.s, 1.0);
        assert!(!eq.balanced);
        let half = select_s_and_theta(1.0, 0.1, 0.8, 0.8).unwrap();
        assert!((half.theta - 0.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn beta_always_gives_positive_mu0(
            d0 in 0.05f64..2.0, ratio in 1.0f64..8.0, eps in 0.001f64..0.05, lambda in 0.5f64..6.0
        ) {
            let d1 = d0 * ratio;
            let w = select_n_eps(eps, d0, d1, 10.0).unwrap();
            let mode = BetaMode::Continuation { eps_tilde: w.eps_tilde, delta2: w.delta2 };
            let b = select_beta(d0, d1, mode).unwrap();
            prop_assert!(b.lower < b.beta && b.beta < b.upper);
            let m = compute_mu(lambda, d0, d1, b.beta, mode).unwrap();
            prop_assert!(m.mu0 > 0.0);
        }

        #[test]
        fn theta_in_unit_interval_and_monotone(c in 0.01f64..50.0, mu0 in 0.01f64..50.0, dc in 0.01f64..5.0) {
            let a = select_s_and_theta(1.0, 0.01, c, mu0).unwrap();
            let b = select_s_and_theta(1.0, 0.01, c + dc, mu0).unwrap();
            let m = select_s_and_theta(1.0, 0.01, c, mu0 + dc).unwrap();
            prop_assert!(a.theta > 0.0 && a.theta < 1.0);
            prop_assert!(b.theta < a.theta);
            prop_assert!(m.theta > a.theta);
        }
    }
}
