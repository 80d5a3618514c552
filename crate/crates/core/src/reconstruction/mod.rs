//! Quasi-reversibility reconstructions, source recovery and stability sweeps.

pub mod qr;
pub mod source;
pub mod stencil;
pub mod sweep;

pub use qr::{
    assemble_qr_system, clamp_s, continuation_error, phi_range, reconstruct, solve_qr, Backend, ContinuationError,
    QrOptions, QrProblem, QrSystem, ReconstructionResult, SourceUnknown,
};
pub use sweep::{
    continuation_run, continuation_setup, data_growth_exponent, discretization_defect, fit_slope, stability_sweep,
    ContinuationSetup, SRule, StabilityStudy, SweepPoint, SweepTemplate,
};
pub use source::{
    assemble_a, estimate_dtv_at_t0, recover_f_part2, recover_from_data, recover_rot_f, recover_source, rot_dtv_at_t0, relative_h1,
    relative_l2, source_unknown, AFrom, PoissonBoundary, SourcePipeline, SourceRecovery,
};
