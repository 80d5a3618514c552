//! Manufactured solutions, sources, condition checks, a reference solver and datasets.

pub mod conditions;
pub mod dataset;
pub mod expr;
pub mod funcs;
pub mod solution;
pub mod source;
pub mod stepper;

pub use expr::{Expr, Smooth};
pub use funcs::{StField, Space, Time};
pub use solution::{mms_forcing, CoefficientFields, ManufacturedSolution};
pub use source::{build_source, SourceModel, SourceSpec};
pub use conditions::{check_conditions, ConditionCheck, ConditionReport};
pub use stepper::{run_manufactured, Diffusion, MacState, ProjectionStepper, StepperConfig};
pub use dataset::{generate_cauchy_data, CauchyDataset, NoiseSpec, Tier, VelocityInput};
