//! Stage and terminal tracking residuals.
//!
//! The stage residual stacks, in order: position error (3), tilt components
//! of the attitude error (2), z component of the yaw factor (1), velocity
//! error (3), body-rate error (3), thrust-state error (4) and input error
//! (4). The cost is the weighted square sum; the terminal residual drops the
//! input block.

use nalgebra::{SMatrix, SVector, Vector4};

use crate::quadmodel::quat;
use crate::quadmodel::{State, StateVector, ATT, POS, RATE, THRUST, VEL};

use super::attitude::attitude_residual_jacobian;
use super::reference::ReferencePoint;
use super::weights::CostWeights;

pub const STAGE_RESIDUAL_DIM: usize = 20;
pub const TERMINAL_RESIDUAL_DIM: usize = 16;

/// Residual vector and its weighted quadratic cost.
#[derive(Debug, Clone)]
pub struct StageCost {
    pub residual: SVector<f64, STAGE_RESIDUAL_DIM>,
    pub cost: f64,
}

#[derive(Debug, Clone)]
pub struct TerminalCost {
    pub residual: SVector<f64, TERMINAL_RESIDUAL_DIM>,
    pub cost: f64,
}

fn raw_residual(
    x: &StateVector,
    reference: &ReferencePoint,
) -> (SVector<f64, TERMINAL_RESIDUAL_DIM>, SMatrix<f64, 3, 4>) {
    let q = x.fixed_rows::<4>(ATT).into_owned();
    let q_ref = quat::from_unit(&reference.attitude);
    let (att, att_jac) = attitude_residual_jacobian(&q, &q_ref);

    let mut y = SVector::<f64, TERMINAL_RESIDUAL_DIM>::zeros();
    y.fixed_rows_mut::<3>(0)
        .copy_from(&(x.fixed_rows::<3>(POS) - reference.position));
    y[3] = att[0];
    y[4] = att[1];
    y[5] = att[2];
    y.fixed_rows_mut::<3>(6)
        .copy_from(&(x.fixed_rows::<3>(VEL) - reference.velocity));
    y.fixed_rows_mut::<3>(9)
        .copy_from(&(x.fixed_rows::<3>(RATE) - reference.body_rate));
    y.fixed_rows_mut::<4>(12)
        .copy_from(&(x.fixed_rows::<4>(THRUST) - reference.rotor_thrust));
    (y, att_jac)
}

fn state_weights(w: &CostWeights, terminal: bool) -> [f64; TERMINAL_RESIDUAL_DIM] {
    let (pos, tilt, yaw, vel, rate, thrust) = if terminal {
        (w.terminal_pos, w.terminal_tilt, w.terminal_yaw, w.terminal_vel, w.terminal_rate, w.terminal_thrust)
    } else {
        (w.pos, w.tilt, w.yaw, w.vel, w.rate, w.thrust)
    };
    [
        pos[0], pos[1], pos[2], tilt, tilt, yaw, vel[0], vel[1], vel[2], rate[0], rate[1],
        rate[2], thrust[0], thrust[1], thrust[2], thrust[3],
    ]
}

/// Running residual and cost for one node.
pub fn stage_residual(
    state: &State,
    input: &Vector4<f64>,
    reference: &ReferencePoint,
    weights: &CostWeights,
) -> StageCost {
    let x = state.to_vector();
    let (ys, _) = raw_residual(&x, reference);
    let mut residual = SVector::<f64, STAGE_RESIDUAL_DIM>::zeros();
    residual.fixed_rows_mut::<TERMINAL_RESIDUAL_DIM>(0).copy_from(&ys);
    residual
        .fixed_rows_mut::<4>(TERMINAL_RESIDUAL_DIM)
        .copy_from(&(input - reference.input));

    let ws = state_weights(weights, false);
    let mut cost = 0.0;
    for i in 0..TERMINAL_RESIDUAL_DIM {
        cost += ws[i] * residual[i] * residual[i];
    }
    for i in 0..4 {
        let e = residual[TERMINAL_RESIDUAL_DIM + i];
        cost += weights.input[i] * e * e;
    }
    StageCost { residual, cost }
}

/// Terminal residual and cost (no input block).
pub fn terminal_residual(
    state: &State,
    reference: &ReferencePoint,
    weights: &CostWeights,
) -> TerminalCost {
    let x = state.to_vector();
    let (residual, _) = raw_residual(&x, reference);
    let ws = state_weights(weights, true);
    let mut cost = 0.0;
    for i in 0..TERMINAL_RESIDUAL_DIM {
        cost += ws[i] * residual[i] * residual[i];
    }
    TerminalCost { residual, cost }
}

/// Square-root-weighted residual and state Jacobian rows used by the
/// Gauss-Newton assembly. The input block carries a constant diagonal
/// Jacobian of `sqrt(input weight)`, returned separately.
pub(crate) fn stage_weighted(
    x: &StateVector,
    u: &Vector4<f64>,
    reference: &ReferencePoint,
    weights: &CostWeights,
) -> (
    SVector<f64, STAGE_RESIDUAL_DIM>,
    SMatrix<f64, STAGE_RESIDUAL_DIM, 17>,
    Vector4<f64>,
) {
    let (ys, att_jac) = raw_residual(x, reference);
    let ws = state_weights(weights, false);

    let mut y = SVector::<f64, STAGE_RESIDUAL_DIM>::zeros();
    let mut jx = SMatrix::<f64, STAGE_RESIDUAL_DIM, 17>::zeros();
    fill_state_rows(&mut y, &mut jx, &ys, &att_jac, &ws);

    let sqrt_wu = Vector4::from_fn(|i, _| weights.input[i].sqrt());
    for i in 0..4 {
        y[TERMINAL_RESIDUAL_DIM + i] = sqrt_wu[i] * (u[i] - reference.input[i]);
    }
    (y, jx, sqrt_wu)
}

pub(crate) fn terminal_weighted(
    x: &StateVector,
    reference: &ReferencePoint,
    weights: &CostWeights,
) -> (
    SVector<f64, TERMINAL_RESIDUAL_DIM>,
    SMatrix<f64, TERMINAL_RESIDUAL_DIM, 17>,
) {
    let (ys, att_jac) = raw_residual(x, reference);
    let ws = state_weights(weights, true);
    let mut y = SVector::<f64, TERMINAL_RESIDUAL_DIM>::zeros();
    let mut jx = SMatrix::<f64, TERMINAL_RESIDUAL_DIM, 17>::zeros();
    fill_state_rows(&mut y, &mut jx, &ys, &att_jac, &ws);
    (y, jx)
}

fn fill_state_rows<const R: usize>(
    y: &mut SVector<f64, R>,
    jx: &mut SMatrix<f64, R, 17>,
    raw: &SVector<f64, TERMINAL_RESIDUAL_DIM>,
    att_jac: &SMatrix<f64, 3, 4>,
    ws: &[f64; TERMINAL_RESIDUAL_DIM],
) {
    let sw: Vec<f64> = ws.iter().map(|w| w.sqrt()).collect();
    for i in 0..TERMINAL_RESIDUAL_DIM {
        y[i] = sw[i] * raw[i];
    }
    // Identity blocks for position / velocity / rate / thrust errors.
    for i in 0..3 {
        jx[(i, POS + i)] = sw[i];
        jx[(6 + i, VEL + i)] = sw[6 + i];
        jx[(9 + i, RATE + i)] = sw[9 + i];
    }
    for i in 0..4 {
        jx[(12 + i, THRUST + i)] = sw[12 + i];
    }
    // Attitude rows chain through the error-split Jacobian.
    for row in 0..3 {
        for col in 0..4 {
            jx[(3 + row, ATT + col)] = sw[3 + row] * att_jac[(row, col)];
        }
    }
}
