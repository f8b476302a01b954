//! Fault-tolerant nonlinear model predictive control with a real-time
//! iteration SQP solver.

mod attitude;
mod linearize;
mod qp;
mod reference;
mod residual;
mod solver;
mod weights;

pub use attitude::{attitude_error_split, AttitudeSplit};
pub use linearize::{linearize_dynamics, InputJacobian, StateJacobian};
pub use qp::{qp_solve, QpSolution, QpStatus, VarBound};
pub use reference::{build_reference, ReferencePoint, ReferenceSource};
pub use residual::{
    stage_residual, terminal_residual, StageCost, TerminalCost, STAGE_RESIDUAL_DIM,
    TERMINAL_RESIDUAL_DIM,
};
pub use solver::{
    clamp_position_error, solve_rti, update_fault_mode, OcpProblem, OcpSettings, OcpSolution,
    RtiController, SolveStatus,
};
pub use weights::CostWeights;
