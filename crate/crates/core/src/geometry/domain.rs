use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::grid::{Face, Grid, TimeAxis};

/// Catalogued geometries. Ω is always the unit square or cube.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Γ is the face x₁ = 1.
    Rect2dRightEdge,
    /// Γ is the union of the faces x₁ = 1 and x₂ = 1.
    Rect2dCorner,
    /// 3D box with Γ the face x₁ = 1.
    Box3dFace,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Rect2dRightEdge, Preset::Rect2dCorner, Preset::Box3dFace];

    pub fn id(&self) -> &'static str {
        match self {
            Preset::Rect2dRightEdge => "rect2d_right_edge",
            Preset::Rect2dCorner => "rect2d_corner",
            Preset::Box3dFace => "box3d_face",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Preset::Box3dFace => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.id() == s)
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

/// Axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AxisBox {
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.lo.iter().zip(&self.hi).zip(x).all(|((l, h), v)| *v >= l - tol && *v <= h + tol)
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).product()
    }
}

/// Ball or disc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn contains(&self, x: &[f64]) -> bool {
        self.center.iter().zip(x).map(|(c, v)| (v - c) * (v - c)).sum::<f64>() < self.radius * self.radius
    }
}

/// Discretized Ω with the auxiliary sets Ω₀ ⊂ Ω, Ω ⊊ Ω₁, ω ⊂ Ω₁∖Ω̄ and Γ ⊂ ∂Ω.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub preset: Preset,
    /// Nodes covering Ω̄.
    pub grid: Grid,
    /// Nodes covering I = [t₀−δ, t₀+δ].
    pub time: TimeAxis,
    pub t0: f64,
    pub delta: f64,
    pub horizon: f64,
    /// Ω₁ as a box containing Ω.
    pub outer: AxisBox,
    /// The observation-free opening ω.
    pub opening: Ball,
    /// Faces of ∂Ω forming Γ.
    pub gamma: Vec<Face>,
    /// Ω₀ as a box.
    pub inner: AxisBox,
    pub inner_mask: Vec<bool>,
}

/// Time layout shared by every preset unless overridden.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSpec {
    pub t0: f64,
    pub delta: f64,
    pub horizon: f64,
    pub intervals: usize,
}

impl Default for TimeSpec {
    fn default() -> Self {
        Self { t0: 0.5, delta: 0.1, horizon: 1.0, intervals: 16 }
    }
}

pub fn build_domain(preset: Preset, cells: usize, time: TimeSpec) -> Result<DomainSpec> {
    let dim = preset.dim();
    if cells < 3 {
        return Err(Error::GridTooSmall { axis: 0, nodes: cells + 1 });
    }
    if time.intervals < 2 || time.intervals % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "time intervals must be even so t0 is a node, got {}",
            time.intervals
        )));
    }
    if !(time.delta > 0.0 && time.t0 - time.delta > 0.0 && time.t0 + time.delta < time.horizon) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < t0-delta < t0+delta < T, got t0={}, delta={}, T={}",
            time.t0, time.delta, time.horizon
        )));
    }
    let grid = Grid::new_box(&vec![0.0; dim], &vec![1.0; dim], &vec![cells; dim])?;
    let (outer_hi, center, gamma, inner) = match preset {
        Preset::Rect2dRightEdge => (
            vec![2.0, 1.0],
            vec![1.2, 0.5],
            vec![Face { axis: 0, upper: true }],
            AxisBox { lo: vec![0.5, 0.25], hi: vec![1.0, 0.75] },
        ),
        Preset::Rect2dCorner => (
            vec![2.0, 2.0],
            vec![1.2, 1.2],
            vec![Face { axis: 0, upper: true }, Face { axis: 1, upper: true }],
            AxisBox { lo: vec![0.5, 0.5], hi: vec![1.0, 1.0] },
        ),
        Preset::Box3dFace => (
            vec![2.0, 1.0, 1.0],
            vec![1.2, 0.5, 0.5],
            vec![Face { axis: 0, upper: true }],
            AxisBox { lo: vec![0.5, 0.25, 0.25], hi: vec![1.0, 0.75, 0.75] },
        ),
    };
    let tol = 1e-9 * grid.h();
    let inner_mask = (0..grid.len()).map(|i| inner.contains(&grid.coords(i)[..dim], tol)).collect();
    let domain = DomainSpec {
        preset,
        time: TimeAxis::symmetric(time.t0, time.delta, time.intervals),
        t0: time.t0,
        delta: time.delta,
        horizon: time.horizon,
        outer: AxisBox { lo: vec![0.0; dim], hi: outer_hi },
        opening: Ball { center, radius: 0.1 },
        gamma,
        inner,
        inner_mask,
        grid,
    };
    domain.check_resolution()?;
    domain.validate()?;
    Ok(domain)
}

impl DomainSpec {
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn h(&self) -> f64 {
        self.grid.h()
    }

    pub fn is_gamma_face(&self, face: Face) -> bool {
        self.gamma.contains(&face)
    }

    /// Faces of ∂Ω not in Γ.
    pub fn hidden_faces(&self) -> Vec<Face> {
        self.grid.faces().into_iter().filter(|f| !self.is_gamma_face(*f)).collect()
    }

    /// Nodes lying on Γ (including its edges).
    pub fn gamma_mask(&self) -> Vec<bool> {
        (0..self.grid.len()).map(|i| self.gamma.iter().any(|f| self.grid.on_face(i, *f))).collect()
    }

    /// Nodes of ∂Ω that do not lie on Γ.
    pub fn hidden_boundary_mask(&self) -> Vec<bool> {
        let gm = self.gamma_mask();
        (0..self.grid.len()).map(|i| self.grid.is_boundary(i) && !gm[i]).collect()
    }

    /// Grid over Ω̄₁ with the spacing of Ω.
    pub fn outer_grid(&self) -> Result<Grid> {
        let lengths: Vec<f64> =
            self.outer.lo.iter().zip(&self.outer.hi).map(|(l, h)| h - l).collect();
        let cells: Vec<usize> = lengths
            .iter()
            .zip(&self.grid.spacing)
            .map(|(l, h)| (l / h).round() as usize)
            .collect();
        Grid::new_box(&self.outer.lo, &lengths, &cells)
    }

    /// Time nodes within `[t0 − half, t0 + half]`.
    pub fn time_window(&self, half: f64) -> Vec<usize> {
        (0..self.time.n)
            .filter(|&k| (self.time.time(k) - self.t0).abs() <= half + 1e-12)
            .collect()
    }

    fn check_resolution(&self) -> Result<()> {
        let h = self.h();
        let dim = self.dim();
        for a in 0..dim {
            let span = self.inner.hi[a] - self.inner.lo[a];
            if span < 2.0 * h - 1e-12 {
                return Err(Error::ResolutionTooCoarse(format!(
                    "Omega_0 spans {span} along axis {a}, less than two cells of {h}"
                )));
            }
            for face in self.hidden_faces().into_iter().filter(|f| f.axis == a) {
                let wall = if face.upper { 1.0 } else { 0.0 };
                let gap = if face.upper { wall - self.inner.hi[a] } else { self.inner.lo[a] - wall };
                if gap < h - 1e-12 {
                    return Err(Error::ResolutionTooCoarse(format!(
                        "Omega_0 is within one cell of a face outside Gamma on axis {a}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Asserts the set relations between Ω, Ω₀, Ω₁, ω and Γ on the grid.
    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        let fail = |m: String| Err(Error::InvalidArgument(m));
        // Ω ⊊ Ω₁
        let contains = (0..dim).all(|a| self.outer.lo[a] <= 0.0 && self.outer.hi[a] >= 1.0);
        let strict = (0..dim).any(|a| self.outer.lo[a] < 0.0 || self.outer.hi[a] > 1.0);
        if !(contains && strict) {
            return fail("Omega is not strictly inside Omega_1".into());
        }
        // ∂Ω∖Γ ⊂ ∂Ω₁ and Γ strictly inside Ω₁
        for face in self.grid.faces() {
            let wall = if face.upper { 1.0 } else { 0.0 };
            let outer_wall = if face.upper { self.outer.hi[face.axis] } else { self.outer.lo[face.axis] };
            let on_outer = (wall - outer_wall).abs() < 1e-12;
            if self.is_gamma_face(face) == on_outer {
                return fail(format!("face {face:?} is inconsistent with Omega_1"));
            }
        }
        // ω̄ ⊂ Ω₁∖Ω̄
        let c = &self.opening.center;
        let r = self.opening.radius;
        let inside_outer = (0..dim).all(|a| c[a] - r > self.outer.lo[a] && c[a] + r < self.outer.hi[a]);
        let dist_to_omega = (0..dim)
            .map(|a| {
                let d = (c[a] - c[a].clamp(0.0, 1.0)).abs();
                d * d
            })
            .sum::<f64>()
            .sqrt();
        if !inside_outer || dist_to_omega <= r {
            return fail("opening is not compactly inside Omega_1 minus closure of Omega".into());
        }
        // Ω̄₀ ⊂ Ω ∪ Γ, and Ω̄₀ ∩ ∂Ω away from ∂Ω∖Γ
        let hidden = self.hidden_faces();
        let mut any_inner = false;
        for i in 0..self.grid.len() {
            if !self.inner_mask[i] {
                continue;
            }
            any_inner = true;
            if hidden.iter().any(|f| self.grid.on_face(i, *f)) {
                return fail(format!("Omega_0 node {i} lies on the boundary outside Gamma"));
            }
        }
        if !any_inner {
            return Err(Error::ResolutionTooCoarse("Omega_0 contains no grid node".into()));
        }
        Ok(())
    }

    /// Run-length encoding of a mask as alternating run lengths starting with `false`.
    pub fn rle(mask: &[bool]) -> Vec<usize> {
        let mut runs = Vec::new();
        let mut current = false;
        let mut len = 0;
        for &m in mask {
            if m == current {
                len += 1;
            } else {
                runs.push(len);
                current = m;
                len = 1;
            }
        }
        runs.push(len);
        runs
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "preset": self.preset.id(),
            "dimension": self.dim(),
            "h": self.grid.spacing,
            "nodes": self.grid.shape,
            "t0": self.t0,
            "delta": self.delta,
            "horizon": self.horizon,
            "dt": self.time.dt,
            "omega1": self.outer,
            "opening": self.opening,
            "gamma": self.gamma,
            "omega0": self.inner,
            "masks": {
                "omega0": Self::rle(&self.inner_mask),
                "gamma": Self::rle(&self.gamma_mask()),
                "hidden_boundary": Self::rle(&self.hidden_boundary_mask()),
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_validate() {
        for p in Preset::ALL {
            let n = if p.dim() == 3 { 8 } else { 16 };
            let d = build_domain(p, n, TimeSpec::default()).unwrap();
            assert_eq!(p.id().parse::<Preset>().unwrap(), p);
            assert_eq!(d.time.index_of(d.t0), Some(8));
        }
        assert!(matches!("disc".parse::<Preset>(), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn right_edge_geometry() {
        let d = build_domain(Preset::Rect2dRightEdge, 64, TimeSpec::default()).unwrap();
        assert_eq!(d.grid.shape, vec![65, 65]);
        let gm = d.gamma_mask();
        for i in 0..d.grid.len() {
            if gm[i] {
                assert!((d.grid.coords(i)[0] - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(gm.iter().filter(|b| **b).count(), 65);
    }

    #[test]
    fn coarse_grid_rejected() {
        assert!(matches!(
            build_domain(Preset::Rect2dRightEdge, 3, TimeSpec::default()),
            Err(Error::ResolutionTooCoarse(_))
        ));
    }

    #[test]
    fn odd_time_intervals_rejected() {
        let t = TimeSpec { intervals: 5, ..TimeSpec::default() };
        assert!(build_domain(Preset::Rect2dRightEdge, 16, t).is_err());
    }

    #[test]
    fn box_inner_volume_within_one_layer() {
        let d = build_domain(Preset::Box3dFace, 16, TimeSpec::default()).unwrap();
        let h = d.h();
        let count = d.inner_mask.iter().filter(|b| **b).count() as f64;
        let exact = d.inner.volume();
        // node count times cell volume overshoots the box by at most one layer of cells
        let surface = 2.0 * (0.5 * 0.5 + 0.5 * 0.5 + 0.5 * 0.5);
        assert!((count * h.powi(3) - exact).abs() <= surface * h + 1e-12);
    }

    #[test]
    fn rle_roundtrip_counts() {
        let runs = DomainSpec::rle(&[true, true, false, true]);
        assert_eq!(runs, vec![0, 2, 1, 1]);
    }
}
