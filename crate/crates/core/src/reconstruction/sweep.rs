//! Noise sweeps of the continuation solver and the fitted Hölder exponent.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::field::{SpaceTime, VectorField};
use crate::forward::dataset::{generate_cauchy_data, NoiseSpec, Tier, VelocityInput};
use crate::forward::expr::{curl, Smooth};
use crate::forward::solution::ManufacturedSolution;
use crate::carleman::{default_s_grid, verify_vorticity_velocity, weight_with_mode};
use crate::geometry::constants::{continuation_constants, psi_extremes, select_s_and_theta, StabilityConstants};
use crate::geometry::domain::DomainSpec;
use crate::geometry::weight::{PsiMode, WeightFunction};
use crate::reconstruction::qr::{clamp_s, continuation_error, reconstruct, QrOptions, QrProblem, SourceUnknown};

/// How s is picked for each run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum SRule {
    /// s = 2/(C+μ₀) ln(M/D) with D the size of the data perturbation plus the discretization defect.
    CaseOne { c: f64, mu0: f64 },
    Fixed { s: f64 },
}

/// Everything a sweep run shares.
pub struct SweepTemplate<'a> {
    pub domain: &'a DomainSpec,
    pub weight: &'a WeightFunction,
    pub solution: &'a ManufacturedSolution,
    pub options: QrOptions,
    pub s_rule: SRule,
    pub eps_tilde: f64,
    /// Added to the noise magnitude before s is chosen.
    pub d_disc: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub sigma: f64,
    pub seed: u64,
    /// ‖data‖ of the exact traces.
    pub d_data: f64,
    /// Size of the injected perturbation, the D of the stability estimate.
    pub d_noise: f64,
    pub m: f64,
    pub s_requested: f64,
    pub s_used: f64,
    /// sqrt of the H^{1,1} part of N(v − v_true).
    pub error: f64,
    pub relative_error: f64,
    /// sqrt of the full N including the Laplacian terms.
    pub error_full: f64,
    pub converged: bool,
    pub relative_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelSummary {
    pub sigma: f64,
    pub d_noise: f64,
    pub mean_error: f64,
    pub min_error: f64,
    pub max_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityStudy {
    pub points: Vec<SweepPoint>,
    pub levels: Vec<LevelSummary>,
    /// σ = 0 run: discretization floor, not fitted.
    pub floor: Option<SweepPoint>,
    pub theta_hat: f64,
    /// θ̂ ± 2 standard errors of the slope.
    pub theta_band: (f64, f64),
    pub theta_pred: Option<f64>,
    pub s_rule: SRule,
    pub monotone: bool,
    pub flags: Vec<String>,
}

/// Weight, stability constants and the two candidate constants C of a continuation study.
pub struct ContinuationSetup {
    pub weight: WeightFunction,
    pub constants: StabilityConstants,
    /// Plateau of the vorticity-velocity Carleman ratio.
    pub c_hat: f64,
    /// μ₀/(Ĉ+μ₀).
    pub theta_carleman: f64,
    /// 2(max_{Γ×I} φ − μ₁): growth rate in s of the data terms against e^{2sμ₁}.
    pub c_data: f64,
    /// μ₀/(c_data+μ₀), the exponent the sweep is compared with.
    pub theta_pred: f64,
}

/// 2(max over Γ×I of φ − μ₁).
pub fn data_growth_exponent(domain: &DomainSpec, weight: &WeightFunction, mu1: f64) -> f64 {
    let nodes: Vec<usize> = domain.grid.boundary_quadrature(&domain.gamma).entries.iter().map(|e| e.node).collect();
    let mut hi = f64::NEG_INFINITY;
    for k in 0..domain.time.n {
        let t = domain.time.time(k);
        for &n in &nodes {
            hi = hi.max(weight.phi(&domain.grid.coords(n), t));
        }
    }
    2.0 * (hi - mu1)
}

/// Size, in the norm of D, of the mismatch between the exact traces and the traces the grid
/// operators produce from the sampled solution.
pub fn discretization_defect(domain: &DomainSpec, solution: &ManufacturedSolution) -> Result<f64> {
    let exact = generate_cauchy_data(VelocityInput::Analytic(solution), domain, Tier::D, NoiseSpec::none(), None)?;
    let sampled = truth(solution, domain);
    let grid = generate_cauchy_data(VelocityInput::Sampled(&sampled), domain, Tier::D, NoiseSpec::none(), None)?;
    let tw = domain.time.weights();
    let mut d = 0.0;
    for (a, b) in exact.traces.iter().zip(&grid.traces).filter(|(a, _)| a.k == 0) {
        let mut s = 0.0;
        for n in 0..domain.time.n {
            for (ie, e) in exact.entries.iter().enumerate() {
                for c in 0..a.ncomp {
                    let diff = exact.value(a, n, ie, c) - grid.value(b, n, ie, c);
                    s += tw[n] * e.weight * diff * diff;
                }
            }
        }
        d += s.sqrt();
    }
    Ok(d)
}

/// Chooses ε so that δ₂ equals the half-width δ of the data window, takes β from the admissible
/// interval and Ĉ from the vorticity-velocity estimate evaluated on `solution`.
pub fn continuation_setup(domain: &DomainSpec, solution: &ManufacturedSolution, lambda: f64) -> Result<ContinuationSetup> {
    let probe = weight_with_mode(domain, lambda, 1.0, PsiMode::Squared)?;
    let (d0, d1) = psi_extremes(domain, &probe);
    let n = ((d1 / d0).floor() as u32 + 1).max(2) as f64;
    let eps = domain.delta * (n - 1.0) / n;
    let mut constants = continuation_constants(domain, &probe, eps)?;
    let weight = probe.with_beta(constants.beta.beta);
    let report = verify_vorticity_velocity(&solution.v, &solution.forcing(), domain, &weight, &default_s_grid())?;
    let c_hat = report.c_hat;
    let mu0 = constants.mus.mu0;
    let c_data = data_growth_exponent(domain, &weight, constants.mus.mu1);
    let theta_pred = mu0 / (c_data + mu0);
    constants.carleman_c = Some(c_hat);
    constants.theta = Some(theta_pred);
    Ok(ContinuationSetup { weight, constants, c_hat, theta_carleman: mu0 / (c_hat + mu0), c_data, theta_pred })
}

/// Least-squares slope of y on x and its standard error.
pub fn fit_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum();
    let se = if x.len() > 2 { (sse / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    (slope, se)
}

fn truth(sol: &ManufacturedSolution, domain: &DomainSpec) -> SpaceTime<VectorField> {
    SpaceTime::from_fn(domain.time, |t| sol.sample_velocity(&domain.grid, t))
}

/// One continuation solve at noise `sigma` and `seed`.
pub fn continuation_run(t: &SweepTemplate, sigma: f64, seed: u64) -> Result<SweepPoint> {
    let domain = t.domain;
    let noise = NoiseSpec { sigma, seed };
    let data = generate_cauchy_data(VelocityInput::Analytic(t.solution), domain, Tier::D, noise, None)?;
    let m = data.bounds.m;
    let s = match t.s_rule {
        SRule::Fixed { s } => s,
        SRule::CaseOne { c, mu0 } => {
            let d = data.noise_magnitudes.d + t.d_disc;
            if d > 0.0 {
                select_s_and_theta(m, d, c, mu0)?.s
            } else {
                clamp_s(f64::INFINITY, t.options.max_exponent, domain, t.weight)
            }
        }
    };
    let forcing = t.solution.forcing();
    let rot_f = curl(&forcing);
    let known: Vec<Vec<f64>> = (0..domain.time.n).map(|k| Smooth::sample(&rot_f[0], &domain.grid, domain.time.time(k))).collect();
    let problem = QrProblem {
        domain,
        weight: t.weight,
        dataset: &data,
        coeffs: &t.solution.coeffs,
        source: SourceUnknown::Known(known),
        options: QrOptions { s, ..t.options },
    };
    let r = reconstruct(&problem)?;
    let e = continuation_error(&r.v, &truth(t.solution, domain), domain, t.eps_tilde)?;
    Ok(SweepPoint {
        sigma,
        seed,
        d_data: data.magnitudes.d,
        d_noise: data.noise_magnitudes.d,
        m,
        s_requested: s,
        s_used: r.s_used,
        error: e.h11.sqrt(),
        relative_error: e.relative_h11,
        error_full: e.total.sqrt(),
        converged: r.stats.converged,
        relative_residual: r.stats.relative_residual,
    })
}

/// Runs every (σ, seed) pair plus a σ = 0 floor run and fits log error against log D.
pub fn stability_sweep(t: &SweepTemplate, sigmas: &[f64], seeds: &[u64], theta_pred: Option<f64>) -> Result<StabilityStudy> {
    if sigmas.len() < 2 || seeds.is_empty() {
        return Err(Error::InvalidArgument("a sweep needs at least two noise levels and one seed".into()));
    }
    if sigmas.windows(2).any(|w| !(w[0] > w[1])) || sigmas.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::InvalidArgument("noise levels must be positive and strictly decreasing".into()));
    }
    let mut points = Vec::new();
    let mut levels = Vec::new();
    for &sigma in sigmas {
        let runs: Vec<SweepPoint> = seeds.iter().map(|&seed| continuation_run(t, sigma, seed)).collect::<Result<_>>()?;
        let n = runs.len() as f64;
        levels.push(LevelSummary {
            sigma,
            d_noise: runs.iter().map(|p| p.d_noise).sum::<f64>() / n,
            mean_error: runs.iter().map(|p| p.error).sum::<f64>() / n,
            min_error: runs.iter().map(|p| p.error).fold(f64::INFINITY, f64::min),
            max_error: runs.iter().map(|p| p.error).fold(0.0, f64::max),
        });
        points.extend(runs);
    }
    let floor = continuation_run(t, 0.0, 0).ok();
    let mut flags = Vec::new();
    if levels.windows(2).any(|w| !(w[1].d_noise < w[0].d_noise)) {
        flags.push("D is not strictly decreasing across the sweep".to_string());
    }
    // monotone up to the seed spread of the two neighbouring levels
    let mut monotone = true;
    for w in levels.windows(2) {
        let band = (w[0].max_error - w[0].min_error).max(w[1].max_error - w[1].min_error);
        if w[1].mean_error > w[0].mean_error + band {
            monotone = false;
            flags.push(format!("error grows from sigma={:e} to sigma={:e} beyond seed variance", w[0].sigma, w[1].sigma));
        }
    }
    let x: Vec<f64> = points.iter().map(|p| p.d_noise.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.error.ln()).collect();
    let (theta_hat, se) = fit_slope(&x, &y);
    if points.iter().any(|p| !p.converged) {
        flags.push("at least one solve did not reach the residual tolerance".to_string());
    }
    Ok(StabilityStudy {
        points,
        levels,
        floor,
        theta_hat,
        theta_band: (theta_hat - 2.0 * se, theta_hat + 2.0 * se),
        theta_pred,
        s_rule: t.s_rule,
        monotone,
        flags,
    })
}

impl StabilityStudy {
    /// CSV rows `sigma, seed, D, error, ...`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["sigma", "seed", "d_noise", "d_data", "m", "s_requested", "s_used", "error", "relative_error", "error_full", "converged"])?;
        let f = crate::forward::dataset::fmt;
        for p in self.points.iter().chain(self.floor.iter()) {
            wr.write_record([
                f(p.sigma),
                p.seed.to_string(),
                f(p.d_noise),
                f(p.d_data),
                f(p.m),
                f(p.s_requested),
                f(p.s_used),
                f(p.error),
                f(p.relative_error),
                f(p.error_full),
                p.converged.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}
