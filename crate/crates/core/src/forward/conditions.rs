//! Grid checks of the source conditions.

use serde::{Serialize, Serializer};

use crate::fields::grid::{Grid, TimeAxis};
use crate::forward::expr::{Expr, Smooth};
use crate::forward::funcs::StField;
use crate::forward::source::{det, SourceModel};
use crate::geometry::domain::DomainSpec;

/// Values below this fraction of the field maximum count as zero.
const ZERO_FRACTION: f64 = 1e-10;
/// Absolute zero level relative to the size of F(·,t₀) and its gradient.
const ROUNDOFF: f64 = 1e-12;
const MAX_LISTED: usize = 20;

fn ser_extended<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str("inf")
    }
}

/// Smallest C with `num ≤ C · den` on the grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub name: String,
    #[serde(serialize_with = "ser_extended")]
    pub constant: f64,
    /// Nodes where the right-hand side vanishes but the left-hand side does not.
    pub offending: Vec<[f64; 3]>,
    pub offending_count: usize,
    /// Nodes where both sides vanish.
    pub vacuous_nodes: usize,
    pub passed: bool,
}

impl ConditionCheck {
    pub fn finite(&self) -> bool {
        self.constant.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub family: String,
    pub c_max: f64,
    /// max |div F(·,t₀)| relative to max |∇F(·,t₀)|.
    pub div_relative: f64,
    pub divergence_free: bool,
    pub rot_dominance: ConditionCheck,
    pub source_dominance: ConditionCheck,
    pub weak_source_dominance: ConditionCheck,
    pub profile_dominance: Option<ConditionCheck>,
    /// Finite rot dominance ⇒ finite source dominance ⇒ finite weak source dominance.
    pub chain_holds: bool,
}

/// Ratio maximization with the 0/0 and x/0 conventions; values at or below `floor`
/// (or a small fraction of their own maximum) count as zero.
pub fn ratio_constant(name: &str, grid: &Grid, num: &[f64], den: &[f64], floor: f64, c_max: f64) -> ConditionCheck {
    let num_tol = floor.max(ZERO_FRACTION * num.iter().fold(0.0f64, |m, v| m.max(*v)));
    let den_tol = floor.max(ZERO_FRACTION * den.iter().fold(0.0f64, |m, v| m.max(*v)));
    let mut constant = 0.0f64;
    let mut offending = Vec::new();
    let mut offending_count = 0;
    let mut vacuous = 0;
    for (i, (&n, &d)) in num.iter().zip(den).enumerate() {
        if d <= den_tol {
            if n <= num_tol {
                vacuous += 1;
            } else {
                constant = f64::INFINITY;
                offending_count += 1;
                if offending.len() < MAX_LISTED {
                    offending.push(grid.coords(i));
                }
            }
        } else {
            constant = constant.max(n / d);
        }
    }
    ConditionCheck {
        name: name.into(),
        constant,
        offending,
        offending_count,
        vacuous_nodes: vacuous,
        passed: constant <= c_max,
    }
}

fn norm_at(parts: &[Expr], x: &[f64; 3], t: f64) -> f64 {
    parts.iter().map(|e| e.eval(x, t).powi(2)).sum::<f64>().sqrt()
}

/// Max over the time axis and `k ≤ kmax` of `|∂ₜᵏ rot F(x,t)|` at every node.
fn rot_dt_max(rots: &[Vec<Expr>], grid: &Grid, time: &TimeAxis, kmax: usize) -> Vec<f64> {
    (0..grid.len())
        .map(|i| {
            let x = grid.coords(i);
            let mut m = 0.0f64;
            for r in rots.iter().take(kmax + 1) {
                for k in 0..time.n {
                    m = m.max(norm_at(r, &x, time.time(k)));
                }
            }
            m
        })
        .collect()
}

/// Evaluates div F = 0, the three dominance conditions and, for matrix families, the profile condition on Ω̄ × Ī.
pub fn check_conditions(source: &SourceModel, domain: &DomainSpec, c_max: f64) -> ConditionReport {
    let grid = &domain.grid;
    let t0 = source.t0;
    let rot0 = source.rot();
    let rot1: Vec<Expr> = rot0.iter().map(|e| e.dt()).collect();
    let rot2: Vec<Expr> = rot1.iter().map(|e| e.dt()).collect();
    let rots = vec![rot0.clone(), rot1, rot2];
    let grad: Vec<Expr> = source.grad().into_iter().flatten().collect();
    let div = source.div();

    let f_mag: Vec<f64> = (0..grid.len())
        .map(|i| {
            let x = grid.coords(i);
            norm_at(&grad, &x, t0) + norm_at(&source.f, &x, t0)
        })
        .collect();
    let rot_t0: Vec<f64> = (0..grid.len()).map(|i| norm_at(&rot0, &grid.coords(i), t0)).collect();
    let n01 = rot_dt_max(&rots, grid, &domain.time, 1);
    let n012 = rot_dt_max(&rots, grid, &domain.time, 2);

    let grad_max = (0..grid.len()).map(|i| norm_at(&grad, &grid.coords(i), t0)).fold(0.0f64, f64::max);
    let div_max = (0..grid.len()).map(|i| div.eval(&grid.coords(i), t0).abs()).fold(0.0f64, f64::max);
    let div_relative = if grad_max > 0.0 { div_max / grad_max } else { div_max };

    let floor = ROUNDOFF * f_mag.iter().fold(0.0f64, |m, v| m.max(*v));
    let rot_dominance = ratio_constant("rot_dominance", grid, &n01, &rot_t0, floor, c_max);
    let source_dominance = ratio_constant("source_dominance", grid, &n012, &f_mag, floor, c_max);
    let weak_source_dominance = ratio_constant("weak_source_dominance", grid, &n01, &f_mag, floor, c_max);

    let profile_dominance = source.profile.as_ref().filter(|_| source.matrix_at(&[0.0; 3], t0).is_some()).map(|f| {
        let fgrad: Vec<StField> = f.iter().flat_map(|c| (0..source.dim).map(move |j| c.dx(j))).collect();
        let lhs: Vec<f64> = (0..grid.len())
            .map(|i| {
                let x = grid.coords(i);
                let g = fgrad.iter().map(|e| e.eval(&x, t0).powi(2)).sum::<f64>().sqrt();
                let v = f.iter().map(|e| e.eval(&x, t0).powi(2)).sum::<f64>().sqrt();
                g + v
            })
            .collect();
        ratio_constant("profile_dominance", grid, &lhs, &f_mag, floor, c_max)
    });

    let chain_holds = (!rot_dominance.finite() || source_dominance.finite()) && (!source_dominance.finite() || weak_source_dominance.finite());
    ConditionReport {
        family: source.family().into(),
        c_max,
        div_relative,
        divergence_free: div_relative <= 1e-9,
        rot_dominance,
        source_dominance,
        weak_source_dominance,
        profile_dominance,
        chain_holds,
    }
}

/// min over the grid of |det R(x,t₀)| for matrix families.
pub fn min_det_at_t0(source: &SourceModel, grid: &Grid) -> Option<f64> {
    (0..grid.len())
        .map(|i| source.matrix_at(&grid.coords(i), source.t0).map(|m| det(&m).abs()))
        .collect::<Option<Vec<f64>>>()
        .map(|v| v.into_iter().fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::source::{build_source, random_source, SourceSpec};
    use crate::geometry::domain::{build_domain, Preset, TimeSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn domain() -> DomainSpec {
        build_domain(Preset::Rect2dRightEdge, 16, TimeSpec::default()).unwrap()
    }

    #[test]
    fn separated_constant_is_max_r_derivative_ratio() {
        let d = domain();
        let s = build_source(&SourceSpec::separated_default(), d.t0, &d.grid).unwrap();
        let rep = check_conditions(&s, &d, 1e6);
        // r = 1 + t², r' = 2t on [0.4, 0.6]; max(|r|, |r'|) / r(0.5)
        let expect = (1.0f64 + 0.36).max(1.2) / 1.25;
        assert!((rep.rot_dominance.constant - expect).abs() < 1e-9, "{}", rep.rot_dominance.constant);
        assert!(rep.divergence_free && rep.rot_dominance.passed && rep.source_dominance.finite() && rep.chain_holds);
    }

    #[test]
    fn obstruction_is_vacuous() {
        let d = domain();
        let s = build_source(&SourceSpec::obstruction_default(2), d.t0, &d.grid).unwrap();
        let rep = check_conditions(&s, &d, 1.0);
        assert_eq!(rep.rot_dominance.constant, 0.0);
        assert!(rep.rot_dominance.passed);
        assert_eq!(rep.rot_dominance.vacuous_nodes, d.grid.len());
    }

    #[test]
    fn matrix_family_passes_profile_dominance() {
        let d = domain();
        let s = build_source(&SourceSpec::matrix_default(), d.t0, &d.grid).unwrap();
        assert!(min_det_at_t0(&s, &d.grid).unwrap() >= 3.0);
        let rep = check_conditions(&s, &d, 100.0);
        let c = rep.profile_dominance.unwrap();
        assert!(c.finite() && c.passed, "{}", c.constant);
        assert!(rep.source_dominance.finite());
    }

    #[test]
    fn zero_denominator_is_infinite_and_listed() {
        let g = Grid::new_box(&[0.0, 0.0], &[1.0, 1.0], &[3, 3]).unwrap();
        let mut den = vec![1.0; g.len()];
        den[4] = 0.0;
        let num = vec![0.5; g.len()];
        let c = ratio_constant("x", &g, &num, &den, 0.0, 10.0);
        assert!(c.constant.is_infinite() && !c.passed);
        assert_eq!(c.offending, vec![g.coords(4)]);
        let j = serde_json::to_value(&c).unwrap();
        assert_eq!(j["constant"], "inf");
    }

    #[test]
    fn implication_chain_on_random_sources() {
        let d = domain();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let s = random_source(&mut rng, d.t0, &d.grid).unwrap();
            let rep = check_conditions(&s, &d, 1e6);
            assert!(rep.chain_holds, "{}", s.family());
        }
    }
}
