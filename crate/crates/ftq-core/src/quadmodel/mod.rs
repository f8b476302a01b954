//! Quadrotor model: parameters, state, dynamics, integration, fault
//! injection and random attitude sampling.

mod dynamics;
mod integrator;
mod params;
pub mod quat;
mod sampling;
mod state;

pub use dynamics::{derivative_raw, quad_dynamics, ATT, POS, RATE, THRUST, VEL};
pub(crate) use integrator::rk4_step_map;
pub use integrator::{integrate_rk4, rk4_step_raw};
pub use params::{apply_fault_bounds, FaultStatus, QuadParams};
pub use sampling::{random_unit_quaternion, rotation_angle};
pub use state::{State, StateVector, STATE_DIM};
