use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform tensor-product grid of nodes covering a box in 2 or 3 dimensions.
///
/// Nodes are stored with axis 0 varying slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub shape: Vec<usize>,
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
}

/// One face of the bounding box: `upper == false` is the face `x_axis = origin`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Face {
    pub axis: usize,
    pub upper: bool,
}

impl Face {
    pub fn outward_sign(&self) -> f64 {
        if self.upper {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEntry {
    pub node: usize,
    pub weight: f64,
    pub face: Face,
}

/// Surface quadrature over a set of faces; a corner node appears once per face it lies on.
#[derive(Debug, Clone, Default)]
pub struct BoundaryQuadrature {
    pub entries: Vec<BoundaryEntry>,
}

impl BoundaryQuadrature {
    pub fn total_measure(&self) -> f64 {
        self.entries.iter().map(|e| e.weight).sum()
    }
}

impl Grid {
    /// Grid over the box `[origin, origin + lengths]` with `cells[a]` intervals per axis.
    pub fn new_box(origin: &[f64], lengths: &[f64], cells: &[usize]) -> Result<Self> {
        if origin.len() != lengths.len() || lengths.len() != cells.len() {
            return Err(Error::ShapeMismatch("origin/lengths/cells rank differ".into()));
        }
        if !(2..=3).contains(&cells.len()) {
            return Err(Error::InvalidArgument(format!(
                "grids are 2D or 3D, got rank {}",
                cells.len()
            )));
        }
        for (axis, &c) in cells.iter().enumerate() {
            if c + 1 < 4 {
                return Err(Error::GridTooSmall { axis, nodes: c + 1 });
            }
        }
        Ok(Self {
            shape: cells.iter().map(|c| c + 1).collect(),
            origin: origin.to_vec(),
            spacing: lengths.iter().zip(cells).map(|(l, &c)| l / c as f64).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Distance between neighbouring nodes along `axis` in the flat index.
    pub fn stride(&self, axis: usize) -> usize {
        self.shape[axis + 1..].iter().product()
    }

    pub fn multi_index(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for axis in (0..self.dim()).rev() {
            out[axis] = idx % self.shape[axis];
            idx /= self.shape[axis];
        }
        out
    }

    pub fn flat_index(&self, mi: &[usize]) -> usize {
        let mut idx = 0;
        for axis in 0..self.dim() {
            idx = idx * self.shape[axis] + mi[axis];
        }
        idx
    }

    /// Physical coordinates of a node; unused trailing entries are zero.
    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let mi = self.multi_index(idx);
        let mut x = [0.0; 3];
        for axis in 0..self.dim() {
            x[axis] = self.origin[axis] + mi[axis] as f64 * self.spacing[axis];
        }
        x
    }

    pub fn upper(&self, axis: usize) -> f64 {
        self.origin[axis] + (self.shape[axis] - 1) as f64 * self.spacing[axis]
    }

    /// Largest spacing over all axes.
    pub fn h(&self) -> f64 {
        self.spacing.iter().cloned().fold(0.0, f64::max)
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let mi = self.multi_index(idx);
        (0..self.dim()).any(|a| mi[a] == 0 || mi[a] + 1 == self.shape[a])
    }

    pub fn faces(&self) -> Vec<Face> {
        (0..self.dim())
            .flat_map(|axis| [Face { axis, upper: false }, Face { axis, upper: true }])
            .collect()
    }

    pub fn on_face(&self, idx: usize, face: Face) -> bool {
        let i = self.multi_index(idx)[face.axis];
        if face.upper {
            i + 1 == self.shape[face.axis]
        } else {
            i == 0
        }
    }

    /// Trapezoidal volume weights.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        (0..self.len())
            .map(|idx| {
                let mi = self.multi_index(idx);
                (0..self.dim())
                    .map(|a| trapezoid_1d(mi[a], self.shape[a], self.spacing[a]))
                    .product()
            })
            .collect()
    }

    /// Trapezoidal surface quadrature over the given faces.
    pub fn boundary_quadrature(&self, faces: &[Face]) -> BoundaryQuadrature {
        let mut entries = Vec::new();
        for &face in faces {
            for idx in 0..self.len() {
                if !self.on_face(idx, face) {
                    continue;
                }
                let mi = self.multi_index(idx);
                let weight = (0..self.dim())
                    .filter(|&a| a != face.axis)
                    .map(|a| trapezoid_1d(mi[a], self.shape[a], self.spacing[a]))
                    .product();
                entries.push(BoundaryEntry { node: idx, weight, face });
            }
        }
        BoundaryQuadrature { entries }
    }
}

pub(crate) fn trapezoid_1d(i: usize, n: usize, h: f64) -> f64 {
    if i == 0 || i + 1 == n {
        0.5 * h
    } else {
        h
    }
}

/// Uniform time nodes `start + k * dt`, `k = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeAxis {
    pub start: f64,
    pub dt: f64,
    pub n: usize,
}

impl TimeAxis {
    /// Nodes covering `[center - half_width, center + half_width]` with `intervals` steps.
    pub fn symmetric(center: f64, half_width: f64, intervals: usize) -> Self {
        Self {
            start: center - half_width,
            dt: 2.0 * half_width / intervals as f64,
            n: intervals + 1,
        }
    }

    pub fn time(&self, k: usize) -> f64 {
        self.start + k as f64 * self.dt
    }

    pub fn end(&self) -> f64 {
        self.time(self.n - 1)
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.n).map(|k| trapezoid_1d(k, self.n, self.dt)).collect()
    }

    /// Index of the node closest to `t`, if it sits on the axis to rounding.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let k = ((t - self.start) / self.dt).round();
        if k < 0.0 || k as usize >= self.n {
            return None;
        }
        let k = k as usize;
        ((self.time(k) - t).abs() <= 1e-9 * self.dt.max(1.0)).then_some(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip_and_coords() {
        let g = Grid::new_box(&[0.0, 0.0, 0.0], &[1.0, 2.0, 3.0], &[4, 5, 6]).unwrap();
        for idx in [0, 7, 33, g.len() - 1] {
            let mi = g.multi_index(idx);
            assert_eq!(g.flat_index(&mi), idx);
        }
        let last = g.coords(g.len() - 1);
        assert!((last[0] - 1.0).abs() < 1e-14 && (last[2] - 3.0).abs() < 1e-14);
        assert_eq!(g.stride(2), 1);
        assert_eq!(g.stride(0), 6 * 7);
    }

    #[test]
    fn quadrature_measures() {
        let g = Grid::new_box(&[0.0, 0.0], &[1.0, 2.0], &[8, 8]).unwrap();
        let vol: f64 = g.trapezoid_weights().iter().sum();
        assert!((vol - 2.0).abs() < 1e-12);
        let perim = g.boundary_quadrature(&g.faces()).total_measure();
        assert!((perim - 6.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_nodes_rejected() {
        assert!(matches!(
            Grid::new_box(&[0.0, 0.0], &[1.0, 1.0], &[2, 8]),
            Err(Error::GridTooSmall { axis: 0, nodes: 3 })
        ));
    }

    #[test]
    fn time_axis_lookup() {
        let ax = TimeAxis::symmetric(0.5, 0.1, 16);
        assert_eq!(ax.index_of(0.5), Some(8));
        assert_eq!(ax.n, 17);
        assert!((ax.end() - 0.6).abs() < 1e-14);
        assert_eq!(ax.index_of(0.503), None);
    }
}
