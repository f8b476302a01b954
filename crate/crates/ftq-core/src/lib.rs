//! Fault-tolerant quadrotor flight-control workbench.
//!
//! The crate is organized in four layers:
//!
//! * [`quadmodel`] — rigid-body quadrotor dynamics with per-rotor thrust
//!   states, thrust/torque allocation, fault injection, RK4 integration and
//!   uniform random attitude sampling.
//! * [`nmpc`] — a fault-aware nonlinear model predictive controller solved by
//!   one Gauss-Newton SQP iteration per control cycle (real-time iteration)
//!   over a condensed box-constrained QP.
//! * [`indi`] — an incremental nonlinear dynamic inversion inner loop that
//!   robustifies the NMPC rotor commands against model mismatch.
//! * [`simkit`] — a deterministic closed-loop simulation harness with
//!   scenario presets, mismatch injection, metrics and a Monte-Carlo driver.

pub mod indi;
pub mod nmpc;
pub mod quadmodel;
pub mod simkit;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("quaternion norm {0} outside unit tolerance")]
    NonUnitQuaternion(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("nominal effectiveness matrix is singular")]
    SingularEffectiveness,
    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),
    #[error("trajectory log does not cover the fault time")]
    LogMissingFaultEpoch,
}
