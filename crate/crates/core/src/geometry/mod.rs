//! Domains, the Carleman weight and the constants of the stability arguments.

pub mod constants;
pub mod domain;
pub mod weight;

pub use constants::{
    compute_mu, continuation_constants, select_beta, select_n_eps, select_s_and_theta, BetaMode,
    StabilityConstants,
};
pub use domain::{build_domain, DomainSpec, Preset, TimeSpec};
pub use weight::{build_weight_profile, Profile, PsiMode, WeightFunction};
