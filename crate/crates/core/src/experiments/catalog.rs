//! The named experiments with the data tier they need and what they exercise.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    /// "D", "D1", "D2" or "none".
    pub tier: &'static str,
    pub anchor: &'static str,
    pub description: &'static str,
}

pub const EXPERIMENTS: [CatalogEntry; 9] = [
    CatalogEntry {
        name: "carleman_thm1",
        tier: "none",
        anchor: "vorticity-velocity Carleman estimate",
        description: "term breakdown and ratio curve of the coupled estimate on a manufactured flow",
    },
    CatalogEntry {
        name: "carleman_lemmas",
        tier: "none",
        anchor: "heat, elliptic and H^-1 Carleman estimates",
        description: "trivial, homogeneity and plateau checks of the four auxiliary estimates",
    },
    CatalogEntry {
        name: "appendix_check",
        tier: "none",
        anchor: "space-time elliptic estimate from its per-slice version",
        description: "constant and threshold comparison of the two elliptic estimates, with the beta -> 0 limit",
    },
    CatalogEntry {
        name: "continuation_sweep",
        tier: "D",
        anchor: "conditional Hoelder stability of the lateral Cauchy problem",
        description: "noise sweep of the Carleman-weighted quasi-reversibility reconstruction and the fitted exponent",
    },
    CatalogEntry {
        name: "inverse_source_i",
        tier: "D1",
        anchor: "stability of rot F(t0) for separated sources",
        description: "rot F(t0) recovered from lateral data and a snapshot, swept over noise",
    },
    CatalogEntry {
        name: "inverse_source_ii",
        tier: "D2",
        anchor: "stability of F(t0) with F and its gradient vanishing on Gamma",
        description: "F(t0) from the Gamma-only Poisson step with a Tikhonov extension, swept over noise",
    },
    CatalogEntry {
        name: "proposition1",
        tier: "D1",
        anchor: "stability of F(t0) for sources supported inside the domain",
        description: "F(t0) from the Dirichlet Poisson step, refined in h at zero noise",
    },
    CatalogEntry {
        name: "obstruction_demo",
        tier: "D1",
        anchor: "gradient sources are invisible to velocity data",
        description: "F = grad psi and F = 0 give identical data and zero recovered rot F",
    },
    CatalogEntry {
        name: "condition_report",
        tier: "none",
        anchor: "dominance conditions on the source and their implications",
        description: "condition constants for the default families and the implication chain on random sources",
    },
];

pub fn find(name: &str) -> Option<&'static CatalogEntry> {
    EXPERIMENTS.iter().find(|e| e.name == name)
}
