//! Linear stability: direct integration of the linearized equation along
//! `φ = ωt` against the exact reduced flow pushed through the chain.

mod flow;
mod stability;

pub use flow::{integrate_linear, integrate_with, reduced_flow, PhaseState, VariablePart, GROWTH_LIMIT};
pub use stability::{
    stability_report, stability_reports, x_slice, ChainEnvelope, FrozenChain, StabilityConfig, StabilityReport,
    TrajectoryRow,
};
