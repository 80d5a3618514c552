use serde::{Deserialize, Serialize};

/// Where a weighted integral was taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// The space-time cylinder Ω×I.
    Cylinder,
    /// A single time slice Ω×{t}.
    Slice { t: f64 },
    /// The lateral boundary ∂Ω×I.
    Lateral,
    /// The observed part of the lateral boundary Γ×I.
    ObservedLateral,
    /// The spatial domain with a time-independent weight.
    Domain,
    /// The boundary ∂Ω with a time-independent weight.
    DomainBoundary,
}

/// `∫ |f|² e^{2sφ}` stored as `mantissa · e^{offset}` so large `s` never overflows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedNormResult {
    pub mantissa: f64,
    pub offset: f64,
    pub s: f64,
    pub region: Region,
}

impl WeightedNormResult {
    /// The integral itself; infinite if it does not fit in an f64.
    pub fn value(&self) -> f64 {
        if self.mantissa == 0.0 {
            0.0
        } else {
            self.mantissa * self.offset.exp()
        }
    }

    pub fn ln_value(&self) -> f64 {
        self.mantissa.ln() + self.offset
    }

    /// Mantissa re-expressed relative to another offset.
    pub fn mantissa_at(&self, offset: f64) -> f64 {
        if self.mantissa == 0.0 {
            0.0
        } else {
            self.mantissa * (self.offset - offset).exp()
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { mantissa: self.mantissa * factor, ..*self }
    }
}

/// The offset shared by every integral taken at parameter `s`.
pub fn shared_offset(s: f64, phi_max: f64) -> f64 {
    2.0 * s * phi_max
}

/// `Σ quad_i · sq_i · e^{2sφ_i − offset}` over matching node lists.
pub fn weighted_mantissa(sq: &[f64], phi: &[f64], quad: &[f64], s: f64, offset: f64) -> f64 {
    debug_assert_eq!(sq.len(), phi.len());
    debug_assert_eq!(sq.len(), quad.len());
    sq.iter()
        .zip(phi)
        .zip(quad)
        .map(|((f2, p), w)| if *f2 == 0.0 { 0.0 } else { w * f2 * (2.0 * s * p - offset).exp() })
        .sum()
}

/// Weighted integral of squared magnitudes `sq` with weight values `phi` and quadrature `quad`.
pub fn weighted_norm(
    sq: &[f64],
    phi: &[f64],
    quad: &[f64],
    s: f64,
    offset: f64,
    region: Region,
) -> WeightedNormResult {
    WeightedNormResult { mantissa: weighted_mantissa(sq, phi, quad, s, offset), offset, s, region }
}
