//! Time integration of the degenerate acoustic flow-map equation, the
//! frozen-coefficient linear operators, the fixed-point iteration scheme,
//! curl diagnostics, admissibility guardrails, and the two-run perturbation
//! distance.

mod accel;
mod leapfrog;
mod linear_ops;
mod perturb;
mod picard;
mod reconstruct;
mod state;

pub use accel::{accel_from_kin, acceleration, curl_acceleration_residual};
pub use leapfrog::{
    relative_energy_drift, simulate, simulate_stream, simulate_with, step_leapfrog, Guardrails,
    SimOptions, SimRun, Termination,
};
pub use linear_ops::{linear_operator_apply, FrozenLinearOps, LinearOperatorKind};
pub use perturb::{curl_transport_residual, fit_growth_exponent, perturbation_distance};
pub use picard::{picard_run, PicardIter, PicardTrace};
pub use reconstruct::{apply_to_flow_map, identity_map_image, reconstruct_flow_map};
pub use state::FlowState;
