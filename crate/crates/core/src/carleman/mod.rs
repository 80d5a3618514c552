//! Both sides of the Carleman inequalities evaluated on manufactured fields over an s-grid.

pub mod h_minus_one;
pub mod inputs;
pub mod report;
pub mod slicing;
pub mod verify;

pub use h_minus_one::{verify_h_minus_one, StaticWeight};
pub use report::{default_s_grid, geometric_s_grid, CarlemanReport, TermSeries};
pub use slicing::{run_slice_check, slice_consistency, SliceVerdict};
pub use verify::{verify_elliptic_slice, verify_elliptic_spacetime, verify_heat, verify_vorticity_velocity, Quadrature};

use crate::error::Result;
use crate::geometry::domain::DomainSpec;
use crate::geometry::weight::{build_weight_profile, PsiMode, WeightFunction};

/// Weight for the domain's profile with ψ = d² and the domain's t₀, δ.
pub fn default_weight(domain: &DomainSpec, lambda: f64, beta: f64) -> Result<WeightFunction> {
    weight_with_mode(domain, lambda, beta, PsiMode::Squared)
}

pub fn weight_with_mode(domain: &DomainSpec, lambda: f64, beta: f64, mode: PsiMode) -> Result<WeightFunction> {
    let (profile, _) = build_weight_profile(domain)?;
    Ok(WeightFunction::new(profile, lambda, beta, domain.t0, domain.delta, mode))
}
