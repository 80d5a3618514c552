//! Structured-grid fields, finite-difference calculus and weighted integrals.

pub mod field;
pub mod grid;
pub mod io;
pub mod norms;
pub mod ops;

pub use field::{ScalarField, SpaceTime, VectorField};
pub use grid::{BoundaryEntry, BoundaryQuadrature, Face, Grid, TimeAxis};
pub use norms::{Region, WeightedNormResult};
