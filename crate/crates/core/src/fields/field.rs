use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::fields::grid::{Grid, TimeAxis};

/// Nodal values of a scalar on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

/// Nodal values of a vector with one array per component.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: Grid,
    pub comps: Vec<Vec<f64>>,
}

/// A field sampled on every node of a time axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTime<F> {
    pub time: TimeAxis,
    pub slices: Vec<F>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.coords(i))).collect();
        Self { grid: grid.clone(), values }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Max magnitude over nodes at least `layers` nodes away from the boundary.
    pub fn interior_max_abs(&self, layers: usize) -> f64 {
        (0..self.grid.len())
            .filter(|&i| {
                let mi = self.grid.multi_index(i);
                (0..self.grid.dim()).all(|a| mi[a] >= layers && mi[a] + layers < self.grid.shape[a])
            })
            .fold(0.0, |m, i| m.max(self.values[i].abs()))
    }

    /// Squared magnitude at each node.
    pub fn sq(&self) -> Vec<f64> {
        self.values.iter().map(|v| v * v).collect()
    }

    /// Trapezoidal L² norm over the grid.
    pub fn l2(&self) -> f64 {
        let w = self.grid.trapezoid_weights();
        self.values.iter().zip(&w).map(|(v, w)| w * v * v).sum::<f64>().sqrt()
    }
}

impl VectorField {
    pub fn new(grid: Grid, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::ShapeMismatch("component length differs from grid".into()));
        }
        Ok(Self { grid, comps })
    }

    pub fn zeros(grid: &Grid, ncomp: usize) -> Self {
        Self { grid: grid.clone(), comps: vec![vec![0.0; grid.len()]; ncomp] }
    }

    pub fn from_fn(grid: &Grid, ncomp: usize, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut comps = vec![Vec::with_capacity(grid.len()); ncomp];
        for i in 0..grid.len() {
            let v = f(grid.coords(i));
            for (c, comp) in comps.iter_mut().enumerate() {
                comp.push(v[c]);
            }
        }
        Self { grid: grid.clone(), comps }
    }

    pub fn ncomp(&self) -> usize {
        self.comps.len()
    }

    pub fn component(&self, c: usize) -> ScalarField {
        ScalarField { grid: self.grid.clone(), values: self.comps[c].clone() }
    }

    pub fn from_components(parts: Vec<ScalarField>) -> Result<Self> {
        let grid = parts
            .first()
            .map(|p| p.grid.clone())
            .ok_or_else(|| Error::ShapeMismatch("no components".into()))?;
        if parts.iter().any(|p| p.grid != grid) {
            return Err(Error::ShapeMismatch("components on different grids".into()));
        }
        Ok(Self { grid, comps: parts.into_iter().map(|p| p.values).collect() })
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            comps: self.comps.iter().map(|c| c.iter().map(|v| a * v).collect()).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().flatten().all(|v| v.is_finite())
    }

    /// Squared Euclidean magnitude at each node.
    pub fn sq(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for c in &self.comps {
            for (o, v) in out.iter_mut().zip(c) {
                *o += v * v;
            }
        }
        out
    }

    pub fn l2(&self) -> f64 {
        let w = self.grid.trapezoid_weights();
        self.sq().iter().zip(&w).map(|(s, w)| w * s).sum::<f64>().sqrt()
    }
}

macro_rules! impl_arith {
    ($ty:ident, $zip:expr) => {
        impl Add for &$ty {
            type Output = $ty;
            fn add(self, rhs: &$ty) -> $ty {
                #[allow(clippy::redundant_closure_call)]
                $zip(self, rhs, |a: f64, b: f64| a + b)
            }
        }
        impl Sub for &$ty {
            type Output = $ty;
            fn sub(self, rhs: &$ty) -> $ty {
                #[allow(clippy::redundant_closure_call)]
                $zip(self, rhs, |a: f64, b: f64| a - b)
            }
        }
        impl Mul<&$ty> for f64 {
            type Output = $ty;
            fn mul(self, rhs: &$ty) -> $ty {
                rhs.scale(self)
            }
        }
    };
}

fn zip_scalar(a: &ScalarField, b: &ScalarField, f: impl Fn(f64, f64) -> f64) -> ScalarField {
    assert_eq!(a.grid, b.grid, "fields live on different grids");
    ScalarField {
        grid: a.grid.clone(),
        values: a.values.iter().zip(&b.values).map(|(x, y)| f(*x, *y)).collect(),
    }
}

fn zip_vector(a: &VectorField, b: &VectorField, f: impl Fn(f64, f64) -> f64) -> VectorField {
    assert_eq!(a.grid, b.grid, "fields live on different grids");
    assert_eq!(a.ncomp(), b.ncomp(), "component counts differ");
    VectorField {
        grid: a.grid.clone(),
        comps: a
            .comps
            .iter()
            .zip(&b.comps)
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| f(*p, *q)).collect())
            .collect(),
    }
}

impl_arith!(ScalarField, zip_scalar);
impl_arith!(VectorField, zip_vector);

impl<F> SpaceTime<F> {
    pub fn new(time: TimeAxis, slices: Vec<F>) -> Result<Self> {
        if slices.len() != time.n {
            return Err(Error::ShapeMismatch(format!(
                "{} slices for {} time nodes",
                slices.len(),
                time.n
            )));
        }
        Ok(Self { time, slices })
    }

    pub fn from_fn(time: TimeAxis, f: impl Fn(f64) -> F) -> Self {
        Self { time, slices: (0..time.n).map(|k| f(time.time(k))).collect() }
    }

    pub fn map<G>(&self, f: impl Fn(&F) -> G) -> SpaceTime<G> {
        SpaceTime { time: self.time, slices: self.slices.iter().map(f).collect() }
    }

    pub fn at(&self, t: f64) -> Option<&F> {
        self.time.index_of(t).map(|k| &self.slices[k])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new_box(&[0.0, 0.0], &[1.0, 1.0], &[4, 4]).unwrap()
    }

    #[test]
    fn arithmetic_is_nodewise() {
        let g = grid();
        let a = ScalarField::from_fn(&g, |x| x[0]);
        let b = ScalarField::from_fn(&g, |x| x[1]);
        let c = &(&a + &b) - &(2.0 * &a);
        for i in 0..g.len() {
            let x = g.coords(i);
            assert!((c.values[i] - (x[1] - x[0])).abs() < 1e-15);
        }
    }

    #[test]
    fn shape_checked() {
        assert!(ScalarField::new(grid(), vec![0.0; 3]).is_err());
        let ax = TimeAxis::symmetric(0.5, 0.1, 4);
        assert!(SpaceTime::new(ax, vec![0.0; 4]).is_err());
    }

    #[test]
    fn l2_of_unit_is_area() {
        let one = ScalarField::from_fn(&grid(), |_| 1.0);
        assert!((one.l2() - 1.0).abs() < 1e-14);
    }
}
