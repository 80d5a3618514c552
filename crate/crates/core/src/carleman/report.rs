//! Term breakdowns, ratio curves and the plateau rule.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

/// Tail band for ŝ₀.
pub const PLATEAU_BAND: f64 = 0.10;
/// Allowed relative spread of the last three ratios.
pub const PLATEAU_SPREAD: f64 = 0.25;

/// `n` geometric points from `s_min` to `s_max`.
pub fn geometric_s_grid(s_min: f64, s_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(s_min > 0.0 && s_max > s_min && n >= 2) {
        return Err(Error::InvalidArgument(format!("bad s-grid ({s_min}, {s_max}, {n})")));
    }
    let r = (s_max / s_min).ln() / (n - 1) as f64;
    Ok((0..n).map(|i| if i + 1 == n { s_max } else { s_min * (r * i as f64).exp() }).collect())
}

pub fn default_s_grid() -> Vec<f64> {
    geometric_s_grid(2.0, 256.0, 8).unwrap()
}

/// One integral of an inequality, with its power of s already applied.
/// Values are in units of `e^{offset}` at the matching s.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermSeries {
    pub name: String,
    pub s_power: i32,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CarlemanReport {
    pub inequality: String,
    pub s: Vec<f64>,
    /// Exponent offsets: every integral at `s[k]` is `value · e^{offsets[k]}`.
    pub offsets: Vec<f64>,
    pub lhs: Vec<TermSeries>,
    pub rhs: Vec<TermSeries>,
    pub rho: Vec<f64>,
    pub c_hat: f64,
    pub s0_hat: f64,
    /// (max − min)/min of ρ over the last three s-points.
    pub plateau_spread: f64,
    pub plateau: bool,
    /// Both sides vanish identically.
    pub trivial: bool,
}

impl CarlemanReport {
    /// Builds ρ(s), Ĉ and ŝ₀. Fails if the right-hand side vanishes while the left does not.
    pub fn assemble(inequality: &str, s: Vec<f64>, offsets: Vec<f64>, lhs: Vec<TermSeries>, rhs: Vec<TermSeries>) -> Result<Self> {
        let total = |terms: &[TermSeries], k: usize| terms.iter().map(|t| t.values[k]).sum::<f64>();
        let mut rho = Vec::with_capacity(s.len());
        let mut all_zero = true;
        for k in 0..s.len() {
            let (l, r) = (total(&lhs, k), total(&rhs, k));
            if lhs.iter().chain(&rhs).any(|t| t.values[k] < 0.0 || !t.values[k].is_finite()) {
                return Err(Error::InvalidArgument(format!("{inequality}: negative or non-finite integral at s = {}", s[k])));
            }
            if r == 0.0 {
                if l != 0.0 {
                    return Err(Error::DegenerateRhs(l));
                }
                rho.push(0.0);
            } else {
                all_zero = false;
                rho.push(l / r);
            }
        }
        let n = rho.len();
        let tail = rho[n - 1];
        let mut k0 = n - 1;
        while k0 > 0 && (rho[k0 - 1] - tail).abs() <= PLATEAU_BAND * tail {
            k0 -= 1;
        }
        let c_hat = rho[k0..].iter().cloned().fold(0.0, f64::max);
        let last = &rho[n.saturating_sub(3)..];
        let (mn, mx) = last.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
        let plateau_spread = if all_zero { 0.0 } else if mn > 0.0 { (mx - mn) / mn } else { f64::INFINITY };
        Ok(Self {
            inequality: inequality.into(),
            s0_hat: s[k0],
            s,
            offsets,
            lhs,
            rhs,
            rho,
            c_hat,
            plateau: plateau_spread < PLATEAU_SPREAD,
            plateau_spread,
            trivial: all_zero,
        })
    }

    pub fn lhs_total(&self, k: usize) -> f64 {
        self.lhs.iter().map(|t| t.values[k]).sum()
    }

    pub fn rhs_total(&self, k: usize) -> f64 {
        self.rhs.iter().map(|t| t.values[k]).sum()
    }

    /// Largest relative difference of ρ against another report on the same s-grid.
    pub fn rho_difference(&self, other: &CarlemanReport) -> f64 {
        self.rho
            .iter()
            .zip(&other.rho)
            .map(|(a, b)| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) })
            .fold(0.0, f64::max)
    }

    /// Columns: s, offset, every LHS term, every RHS term, the two totals and ρ.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["s".to_string(), "offset".to_string()];
        header.extend(self.lhs.iter().map(|t| format!("lhs_{}", t.name)));
        header.extend(self.rhs.iter().map(|t| format!("rhs_{}", t.name)));
        header.extend(["lhs_total", "rhs_total", "rho"].map(String::from));
        wr.write_record(&header)?;
        for k in 0..self.s.len() {
            let mut rec = vec![num(self.s[k]), num(self.offsets[k])];
            rec.extend(self.lhs.iter().chain(&self.rhs).map(|t| num(t.values[k])));
            rec.extend([num(self.lhs_total(k)), num(self.rhs_total(k)), num(self.rho[k])]);
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "inequality": self.inequality,
            "c_hat": self.c_hat,
            "s0_hat": self.s0_hat,
            "plateau_spread": finite_or_str(self.plateau_spread),
            "plateau": self.plateau,
            "trivial": self.trivial,
            "s": self.s,
            "offsets": self.offsets,
            "rho": self.rho,
        })
    }
}

pub(crate) fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:e}")
    } else {
        "inf".into()
    }
}

pub(crate) fn finite_or_str(v: f64) -> serde_json::Value {
    if v.is_finite() {
        serde_json::json!(v)
    } else {
        serde_json::json!("inf")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(name: &str, v: Vec<f64>) -> TermSeries {
        TermSeries { name: name.into(), s_power: 0, values: v }
    }

    #[test]
    fn grid_endpoints_and_ratio() {
        let s = default_s_grid();
        assert_eq!(s.len(), 8);
        assert_eq!(s[0], 2.0);
        assert_eq!(s[7], 256.0);
        assert!((s[1] / s[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn plateau_rule() {
        let s = vec![1.0, 2.0, 4.0, 8.0, 16.0];
        let lhs = vec![series("a", vec![5.0, 3.0, 2.05, 2.0, 1.95])];
        let rhs = vec![series("b", vec![1.0; 5])];
        let r = CarlemanReport::assemble("t", s, vec![0.0; 5], lhs, rhs).unwrap();
        assert_eq!(r.s0_hat, 4.0);
        assert_eq!(r.c_hat, 2.05);
        assert!(r.plateau && (r.plateau_spread - 0.1 / 1.95).abs() < 1e-12);
    }

    #[test]
    fn zero_over_zero_is_trivial_and_x_over_zero_fails() {
        let z = || vec![series("a", vec![0.0, 0.0])];
        let r = CarlemanReport::assemble("t", vec![1.0, 2.0], vec![0.0; 2], z(), z()).unwrap();
        assert!(r.trivial && r.plateau);
        let bad = CarlemanReport::assemble("t", vec![1.0, 2.0], vec![0.0; 2], vec![series("a", vec![1.0, 0.0])], z());
        assert!(matches!(bad, Err(Error::DegenerateRhs(_))));
    }

    #[test]
    fn csv_has_one_row_per_s() {
        let r = CarlemanReport::assemble("t", vec![1.0, 2.0], vec![0.5, 1.0], vec![series("a", vec![1.0, 2.0])], vec![series("b", vec![1.0, 1.0])]).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("s,offset,lhs_a,rhs_b,lhs_total,rhs_total,rho"));
    }
}
