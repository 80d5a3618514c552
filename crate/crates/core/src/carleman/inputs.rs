//! Manufactured fields fed to the verifiers by default.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::error::Result;
use crate::forward::funcs::{radial_bump, Mono, Space, StField, Time};
use crate::forward::solution::{CoefficientFields, ManufacturedSolution};

/// Taylor–Green velocity with smooth A and, if `with_b`, a nonzero B.
pub fn vorticity_solution(dim: usize, with_b: bool) -> Result<ManufacturedSolution> {
    let base = if dim == 3 { ManufacturedSolution::taylor_green_3d(PI) } else { ManufacturedSolution::taylor_green(PI) };
    let coeffs = CoefficientFields::smooth(dim);
    base.with_coeffs(if with_b { coeffs } else { coeffs.without_b() })
}

fn phases(dim: usize, p: f64) -> [f64; 3] {
    [p, p, if dim == 3 { p } else { FRAC_PI_2 }]
}

fn wavenumbers(dim: usize, k: f64) -> [f64; 3] {
    [k, k, if dim == 3 { k } else { 0.0 }]
}

/// A heat-equation mode that does not vanish on the boundary of the unit box.
pub fn heat_mode(dim: usize) -> Vec<StField> {
    let rate = -(dim as f64) * PI * PI;
    vec![StField::term(1.0, Space::trig(wavenumbers(dim, PI), phases(dim, FRAC_PI_4)), Time::exp(rate))]
}

pub fn constant_field(c: f64) -> Vec<StField> {
    vec![StField::term(c, Space::one(), Time::constant())]
}

/// sin sin (sin) times `1 + (t − t0)`.
pub fn elliptic_field(dim: usize, t0: f64) -> Vec<StField> {
    vec![StField::term(1.0, Space::trig(wavenumbers(dim, 2.0), phases(dim, 0.0)), Time::poly(t0, vec![1.0, 1.0]))]
}

/// x² − y² + xy/2 about `center`.
pub fn harmonic_field(center: [f64; 3]) -> Vec<StField> {
    let monos = vec![
        Mono { c: 1.0, e: [2, 0, 0] },
        Mono { c: -1.0, e: [0, 2, 0] },
        Mono { c: 0.5, e: [1, 1, 0] },
    ];
    vec![StField::term(1.0, Space::Poly { center, monos }, Time::constant())]
}

/// (1 − |x − c|²/ρ²)³ clipped to the ball.
pub fn bump(center: [f64; 3], radius: f64, dim: usize) -> StField {
    StField::term(1.0, radial_bump(center, radius, 3, dim), Time::constant())
}
