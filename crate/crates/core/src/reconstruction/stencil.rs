//! Coefficient lists of the finite-difference operators in `fields::ops`, one node at a time.

use crate::fields::grid::Grid;

pub type Stencil = Vec<(usize, f64)>;

/// Row of `ops::d1` at node `idx`.
pub fn d1(grid: &Grid, idx: usize, axis: usize) -> Stencil {
    let s = grid.stride(axis);
    let n = grid.shape[axis];
    let c = 0.5 / grid.spacing[axis];
    let i = (idx / s) % n;
    if i == 0 {
        vec![(idx, -3.0 * c), (idx + s, 4.0 * c), (idx + 2 * s, -c)]
    } else if i == n - 1 {
        vec![(idx, 3.0 * c), (idx - s, -4.0 * c), (idx - 2 * s, c)]
    } else {
        vec![(idx + s, c), (idx - s, -c)]
    }
}

/// Row of `ops::d2` at node `idx`.
pub fn d2(grid: &Grid, idx: usize, axis: usize) -> Stencil {
    let s = grid.stride(axis);
    let n = grid.shape[axis];
    let c = 1.0 / (grid.spacing[axis] * grid.spacing[axis]);
    let i = (idx / s) % n;
    if i == 0 {
        vec![(idx, 2.0 * c), (idx + s, -5.0 * c), (idx + 2 * s, 4.0 * c), (idx + 3 * s, -c)]
    } else if i == n - 1 {
        vec![(idx, 2.0 * c), (idx - s, -5.0 * c), (idx - 2 * s, 4.0 * c), (idx - 3 * s, -c)]
    } else {
        vec![(idx + s, c), (idx, -2.0 * c), (idx - s, c)]
    }
}

pub fn laplacian(grid: &Grid, idx: usize) -> Stencil {
    (0..grid.dim()).flat_map(|a| d2(grid, idx, a)).collect()
}

/// Time-derivative row at slice `k` of `n` slices, matching `ops::time_derivative`.
pub fn dt(n: usize, dt: f64, k: usize) -> Stencil {
    if k == 0 {
        vec![(0, -1.5 / dt), (1, 2.0 / dt), (2, -0.5 / dt)]
    } else if k == n - 1 {
        vec![(n - 1, 1.5 / dt), (n - 2, -2.0 / dt), (n - 3, 0.5 / dt)]
    } else {
        vec![(k + 1, 0.5 / dt), (k - 1, -0.5 / dt)]
    }
}

pub fn apply(st: &Stencil, f: &[f64]) -> f64 {
    st.iter().map(|(i, c)| c * f[*i]).sum()
}
