//! Second-order finite differences on collocated grids.
//!
//! Interior nodes use central differences. Boundary nodes use one-sided
//! second-order stencils, so every operator is O(h²) up to the boundary.

use crate::error::{Error, Result};
use crate::fields::field::{ScalarField, SpaceTime, VectorField};
use crate::fields::grid::Grid;

fn check_grid(grid: &Grid) -> Result<()> {
    for (axis, &n) in grid.shape.iter().enumerate() {
        if n < 4 {
            return Err(Error::GridTooSmall { axis, nodes: n });
        }
    }
    Ok(())
}

/// First derivative along `axis` of nodal values `f`.
pub fn d1(grid: &Grid, f: &[f64], axis: usize) -> Vec<f64> {
    let s = grid.stride(axis);
    let n = grid.shape[axis];
    let h = grid.spacing[axis];
    let mut out = vec![0.0; f.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let i = (idx / s) % n;
        *o = if i == 0 {
            (-3.0 * f[idx] + 4.0 * f[idx + s] - f[idx + 2 * s]) / (2.0 * h)
        } else if i == n - 1 {
            (3.0 * f[idx] - 4.0 * f[idx - s] + f[idx - 2 * s]) / (2.0 * h)
        } else {
            (f[idx + s] - f[idx - s]) / (2.0 * h)
        };
    }
    out
}

/// Second derivative along `axis` of nodal values `f`.
pub fn d2(grid: &Grid, f: &[f64], axis: usize) -> Vec<f64> {
    let s = grid.stride(axis);
    let n = grid.shape[axis];
    let h2 = grid.spacing[axis] * grid.spacing[axis];
    let mut out = vec![0.0; f.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let i = (idx / s) % n;
        *o = if i == 0 {
            (2.0 * f[idx] - 5.0 * f[idx + s] + 4.0 * f[idx + 2 * s] - f[idx + 3 * s]) / h2
        } else if i == n - 1 {
            (2.0 * f[idx] - 5.0 * f[idx - s] + 4.0 * f[idx - 2 * s] - f[idx - 3 * s]) / h2
        } else {
            (f[idx + s] - 2.0 * f[idx] + f[idx - s]) / h2
        };
    }
    out
}

pub fn partial(f: &ScalarField, axis: usize) -> Result<ScalarField> {
    check_grid(&f.grid)?;
    Ok(ScalarField { grid: f.grid.clone(), values: d1(&f.grid, &f.values, axis) })
}

pub fn gradient(f: &ScalarField) -> Result<VectorField> {
    check_grid(&f.grid)?;
    let comps = (0..f.grid.dim()).map(|a| d1(&f.grid, &f.values, a)).collect();
    Ok(VectorField { grid: f.grid.clone(), comps })
}

pub fn divergence(v: &VectorField) -> Result<ScalarField> {
    check_grid(&v.grid)?;
    if v.ncomp() != v.grid.dim() {
        return Err(Error::ShapeMismatch("divergence needs dim components".into()));
    }
    let mut out = vec![0.0; v.grid.len()];
    for (a, c) in v.comps.iter().enumerate() {
        for (o, d) in out.iter_mut().zip(d1(&v.grid, c, a)) {
            *o += d;
        }
    }
    Ok(ScalarField { grid: v.grid.clone(), values: out })
}

pub(crate) fn laplacian_raw(grid: &Grid, f: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    for a in 0..grid.dim() {
        for (o, d) in out.iter_mut().zip(d2(grid, f, a)) {
            *o += d;
        }
    }
    out
}

pub fn laplacian(f: &ScalarField) -> Result<ScalarField> {
    check_grid(&f.grid)?;
    Ok(ScalarField { grid: f.grid.clone(), values: laplacian_raw(&f.grid, &f.values) })
}

pub fn vector_laplacian(v: &VectorField) -> Result<VectorField> {
    check_grid(&v.grid)?;
    let comps = v.comps.iter().map(|c| laplacian_raw(&v.grid, c)).collect();
    Ok(VectorField { grid: v.grid.clone(), comps })
}

/// Curl of a vector field: the scalar `∂₁v₂ − ∂₂v₁` in 2D, the usual vector in 3D.
pub fn curl(v: &VectorField) -> Result<VectorField> {
    check_grid(&v.grid)?;
    let g = &v.grid;
    match (g.dim(), v.ncomp()) {
        (2, 2) => {
            let c: Vec<f64> = d1(g, &v.comps[1], 0)
                .iter()
                .zip(d1(g, &v.comps[0], 1))
                .map(|(a, b)| a - b)
                .collect();
            Ok(VectorField { grid: g.clone(), comps: vec![c] })
        }
        (3, 3) => {
            let sub = |a: Vec<f64>, b: Vec<f64>| -> Vec<f64> {
                a.iter().zip(b).map(|(x, y)| x - y).collect()
            };
            let c0 = sub(d1(g, &v.comps[2], 1), d1(g, &v.comps[1], 2));
            let c1 = sub(d1(g, &v.comps[0], 2), d1(g, &v.comps[2], 0));
            let c2 = sub(d1(g, &v.comps[1], 0), d1(g, &v.comps[0], 1));
            Ok(VectorField { grid: g.clone(), comps: vec![c0, c1, c2] })
        }
        (d, c) => Err(Error::ShapeMismatch(format!("curl of {c} components in {d}D"))),
    }
}

/// 2D scalar curl `∂₁v₂ − ∂₂v₁`.
pub fn curl2(v: &VectorField) -> Result<ScalarField> {
    if v.grid.dim() != 2 {
        return Err(Error::ShapeMismatch("curl2 needs a 2D field".into()));
    }
    let c = curl(v)?;
    Ok(c.component(0))
}

/// Rotated gradient `(∂₂z, −∂₁z)` of a 2D scalar; the adjoint partner of `curl2`.
pub fn rot_scalar(z: &ScalarField) -> Result<VectorField> {
    check_grid(&z.grid)?;
    if z.grid.dim() != 2 {
        return Err(Error::ShapeMismatch("rot_scalar needs a 2D field".into()));
    }
    let a = d1(&z.grid, &z.values, 1);
    let b: Vec<f64> = d1(&z.grid, &z.values, 0).iter().map(|v| -v).collect();
    Ok(VectorField { grid: z.grid.clone(), comps: vec![a, b] })
}

/// Curl applied twice: `rot_scalar(curl2 v)` in 2D, `curl(curl v)` in 3D.
pub fn curl_curl(v: &VectorField) -> Result<VectorField> {
    match v.grid.dim() {
        2 => rot_scalar(&curl2(v)?),
        _ => curl(&curl(v)?),
    }
}

/// Pointwise `|−Δw − rot rot w + ∇ div w|`, which vanishes for smooth `w` up to truncation.
pub fn vector_identity_residual(w: &VectorField) -> Result<ScalarField> {
    let lap = vector_laplacian(w)?;
    let cc = curl_curl(w)?;
    let gd = gradient(&divergence(w)?)?;
    let mut sq = vec![0.0; w.grid.len()];
    for c in 0..w.ncomp() {
        for (i, s) in sq.iter_mut().enumerate() {
            let r = -lap.comps[c][i] - cc.comps[c][i] + gd.comps[c][i];
            *s += r * r;
        }
    }
    Ok(ScalarField { grid: w.grid.clone(), values: sq.into_iter().map(f64::sqrt).collect() })
}

fn lin_scalar(terms: &[(f64, &ScalarField)]) -> ScalarField {
    let mut out = ScalarField::zeros(&terms[0].1.grid);
    for (c, f) in terms {
        for (o, v) in out.values.iter_mut().zip(&f.values) {
            *o += c * v;
        }
    }
    out
}

fn lin_vector(terms: &[(f64, &VectorField)]) -> VectorField {
    let mut out = VectorField::zeros(&terms[0].1.grid, terms[0].1.ncomp());
    for (c, f) in terms {
        for (oc, fc) in out.comps.iter_mut().zip(&f.comps) {
            for (o, v) in oc.iter_mut().zip(fc) {
                *o += c * v;
            }
        }
    }
    out
}

fn time_derivative_with<F: Clone>(
    f: &SpaceTime<F>,
    lin: impl Fn(&[(f64, &F)]) -> F,
) -> Result<SpaceTime<F>> {
    let n = f.time.n;
    if n < 3 {
        return Err(Error::InvalidArgument("time derivative needs at least 3 slices".into()));
    }
    let dt = f.time.dt;
    let s = &f.slices;
    let slices = (0..n)
        .map(|k| {
            let terms: Vec<(f64, &F)> = if k == 0 {
                vec![(-1.5 / dt, &s[0]), (2.0 / dt, &s[1]), (-0.5 / dt, &s[2])]
            } else if k == n - 1 {
                vec![(1.5 / dt, &s[n - 1]), (-2.0 / dt, &s[n - 2]), (0.5 / dt, &s[n - 3])]
            } else {
                vec![(0.5 / dt, &s[k + 1]), (-0.5 / dt, &s[k - 1])]
            };
            lin(&terms)
        })
        .collect();
    Ok(SpaceTime { time: f.time, slices })
}

pub fn time_derivative(f: &SpaceTime<ScalarField>) -> Result<SpaceTime<ScalarField>> {
    time_derivative_with(f, lin_scalar)
}

pub fn time_derivative_vec(f: &SpaceTime<VectorField>) -> Result<SpaceTime<VectorField>> {
    time_derivative_with(f, lin_vector)
}

/// Central difference in time at an interior slice `k`.
pub fn central_time_difference(f: &SpaceTime<VectorField>, k: usize) -> Result<VectorField> {
    if k == 0 || k + 1 >= f.time.n {
        return Err(Error::InvalidArgument(
            "central difference needs a slice strictly inside the time axis".into(),
        ));
    }
    let dt = f.time.dt;
    Ok(lin_vector(&[(0.5 / dt, &f.slices[k + 1]), (-0.5 / dt, &f.slices[k - 1])]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::grid::TimeAxis;

    fn unit(n: usize) -> Grid {
        Grid::new_box(&[0.0, 0.0], &[1.0, 1.0], &[n, n]).unwrap()
    }

    #[test]
    fn curl_of_rotation_is_two() {
        let g = unit(8);
        let v = VectorField::from_fn(&g, 2, |x| [-x[1], x[0], 0.0]);
        let c = curl2(&v).unwrap();
        assert!(c.values.iter().all(|z| (z - 2.0).abs() < 1e-12));
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = unit(6);
        let f = ScalarField::from_fn(&g, |_| 3.5);
        assert_eq!(gradient(&f).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn stencils_exact_on_quadratics_and_cubics() {
        let g = unit(7);
        let f = ScalarField::from_fn(&g, |x| x[0] * x[0] * x[0] + 2.0 * x[1] * x[1]);
        let d = partial(&f, 0).unwrap();
        let lap = laplacian(&f).unwrap();
        for i in 0..g.len() {
            let x = g.coords(i);
            assert!((lap.values[i] - (6.0 * x[0] + 4.0)).abs() < 1e-9);
            // one-sided first differences carry h²·f'''/3 on cubics
            let h = g.spacing[0];
            let slack = 2.0 * h * h + 1e-12;
            assert!((d.values[i] - 3.0 * x[0] * x[0]).abs() <= slack);
        }
    }

    #[test]
    fn too_small_grid_rejected() {
        let g = Grid { shape: vec![3, 5], origin: vec![0.0, 0.0], spacing: vec![0.5, 0.25] };
        let f = ScalarField::zeros(&g);
        assert!(matches!(gradient(&f), Err(Error::GridTooSmall { axis: 0, nodes: 3 })));
    }

    #[test]
    fn time_derivative_exact_on_quadratic() {
        let g = unit(4);
        let ax = TimeAxis::symmetric(0.5, 0.1, 6);
        let f = SpaceTime::from_fn(ax, |t| ScalarField::from_fn(&g, |_| t * t));
        let d = time_derivative(&f).unwrap();
        for k in 0..ax.n {
            let t = ax.time(k);
            assert!(d.slices[k].values.iter().all(|v| (v - 2.0 * t).abs() < 1e-10));
        }
    }

    #[test]
    fn identity_residual_small_for_smooth_field() {
        let coarse = unit(16);
        let fine = unit(32);
        let w = |g: &Grid| {
            VectorField::from_fn(g, 2, |x| [(x[0] * 2.0).sin() * x[1].cos(), (x[0] * x[1]).exp(), 0.0])
        };
        // same-axis composition of one-sided stencils is only O(h) in the first two layers
        let r1 = vector_identity_residual(&w(&coarse)).unwrap().interior_max_abs(2);
        let r2 = vector_identity_residual(&w(&fine)).unwrap().interior_max_abs(2);
        assert!(r2 < r1 / 3.0, "residual {r1} -> {r2}");
    }
}
