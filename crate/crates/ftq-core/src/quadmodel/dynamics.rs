//! Continuous-time quadrotor dynamics.
//!
//! State derivative (17 components):
//!
//! ```text
//! p'     = v
//! v'     = R(q) e3 * (T1+T2+T3+T4)/m - g e3
//! q'     = 1/2 q ∘ (0, w)
//! w'     = Iv^-1 (tau - w x Iv w)
//! Ti'    = (ui - Ti) / sigma
//! ```
//!
//! with body torques `tau` from the effectiveness matrix. Rotor thrusts are
//! stored in newtons; the collective is divided by the mass here so the
//! allocation and the bounds stay in physical units.

use nalgebra::Vector4;

use crate::Error;

use super::params::QuadParams;
use super::quat;
use super::state::{State, StateVector};

pub const POS: usize = 0;
pub const VEL: usize = 3;
pub const ATT: usize = 6;
pub const RATE: usize = 10;
pub const THRUST: usize = 13;

const UNIT_NORM_TOL: f64 = 1e-6;

/// State derivative on the flat layout.
///
/// The attitude block is treated as four independent coordinates. The
/// quaternion kinematics keep the norm constant along exact flows, and the
/// homogeneous rotation form stays smooth off the unit sphere, which is what
/// the shooting discretization in the solver relies on.
pub fn derivative_raw(x: &StateVector, input: &Vector4<f64>, params: &QuadParams) -> StateVector {
    let v = x.fixed_rows::<3>(VEL);
    let q = x.fixed_rows::<4>(ATT).into_owned();
    let w = x.fixed_rows::<3>(RATE).into_owned();
    let t = x.fixed_rows::<4>(THRUST).into_owned();

    let mut dx = StateVector::zeros();

    // p' = v
    dx.fixed_rows_mut::<3>(POS).copy_from(&v);

    // v' = thrust axis * T/m - g e3
    let collective = t.sum();
    let mut accel = quat::thrust_axis_hom(&q) * (collective / params.mass);
    accel[2] -= params.gravity;
    dx.fixed_rows_mut::<3>(VEL).copy_from(&accel);

    // q' = 1/2 q ∘ (0, w)
    let dq = quat::mul(&q, &Vector4::new(0.0, w[0], w[1], w[2])) * 0.5;
    dx.fixed_rows_mut::<4>(ATT).copy_from(&dq);

    // w' = Iv^-1 (tau - w x Iv w)
    let torque = params.torque_rows() * t;
    let inertia = params.inertia_diag;
    let iw = inertia.component_mul(&w);
    let gyro = w.cross(&iw);
    let dw = (torque - gyro).component_div(&inertia);
    dx.fixed_rows_mut::<3>(RATE).copy_from(&dw);

    // Ti' = (ui - Ti) / sigma
    let dt_rotor = (input - t) / params.motor_tau;
    dx.fixed_rows_mut::<4>(THRUST).copy_from(&dt_rotor);

    dx
}

/// Typed entry point; rejects states whose attitude has drifted off the unit
/// sphere beyond tolerance.
pub fn quad_dynamics(
    state: &State,
    input: &Vector4<f64>,
    params: &QuadParams,
) -> Result<StateVector, Error> {
    let norm = state.attitude.as_ref().norm();
    if (norm - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::NonUnitQuaternion(norm));
    }
    Ok(derivative_raw(&state.to_vector(), input, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{UnitQuaternion, Vector3};

    #[test]
    fn hover_is_an_equilibrium() {
        let params = QuadParams::default();
        let state = State::hover(&params, Vector3::new(0.0, 0.0, 2.0));
        let dx = quad_dynamics(&state, &params.hover_thrusts(), &params).unwrap();
        assert!(dx.amax() < 1e-12, "hover derivative {dx}");
    }

    #[test]
    fn zero_thrust_free_fall() {
        let params = QuadParams::default();
        let mut state = State::hover(&params, Vector3::zeros());
        state.rotor_thrust = Vector4::zeros();
        let dx = quad_dynamics(&state, &Vector4::zeros(), &params).unwrap();
        assert_relative_eq!(dx[VEL], 0.0, epsilon = 1e-14);
        assert_relative_eq!(dx[VEL + 1], 0.0, epsilon = 1e-14);
        assert_relative_eq!(dx[VEL + 2], -params.gravity, epsilon = 1e-14);
    }

    #[test]
    fn principal_axis_spin_has_no_gyroscopic_torque() {
        let params = QuadParams::default();
        let mut state = State::hover(&params, Vector3::zeros());
        state.body_rate = Vector3::new(0.0, 0.0, 5.0);
        // Equal thrusts: zero commanded torque.
        let dx = quad_dynamics(&state, &params.hover_thrusts(), &params).unwrap();
        for i in RATE..RATE + 3 {
            assert_relative_eq!(dx[i], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_non_unit_attitude() {
        let params = QuadParams::default();
        let mut x = State::hover(&params, Vector3::zeros()).to_vector();
        x[ATT] = 2.0;
        let state = State {
            // Bypass the normalizing constructor to exercise the guard.
            attitude: UnitQuaternion::new_unchecked(nalgebra::Quaternion::new(2.0, 0.0, 0.0, 0.0)),
            ..State::hover(&params, Vector3::zeros())
        };
        assert!(matches!(
            quad_dynamics(&state, &params.hover_thrusts(), &params),
            Err(Error::NonUnitQuaternion(_))
        ));
    }
}
