//! Scenario assembly, the simulation loop, metrics and assumption checks.

mod metrics;
mod profile;
mod sim;

pub use metrics::{
    assumption_report, composite_error, compute_metrics, preflight_report, AssumptionCheck, DecayFit, Metrics,
    ESTIMATION_WINDOW_START,
};
pub use profile::LeaderProfile;
pub use sim::{desired_trajectory, leader_velocity, preflight, run, SimRecord, StepSample, VehicleSeries};
