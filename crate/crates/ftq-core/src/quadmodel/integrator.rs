//! Classical RK4 integration of the flight state.

use nalgebra::Vector4;

use crate::Error;

use super::dynamics::{derivative_raw, ATT};
use super::params::QuadParams;
use super::quat;
use super::state::{State, StateVector};

/// One RK4 step of an arbitrary state-vector field.
pub(crate) fn rk4_step_map<F>(f: F, x: &StateVector, dt: f64) -> StateVector
where
    F: Fn(&StateVector) -> StateVector,
{
    let k1 = f(x);
    let k2 = f(&(x + k1 * (dt / 2.0)));
    let k3 = f(&(x + k2 * (dt / 2.0)));
    let k4 = f(&(x + k3 * dt));
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

/// One RK4 step on the flat layout with the input held constant.
///
/// The attitude block is not renormalized; this is the smooth shooting map
/// the solver linearizes. Use [`integrate_rk4`] for ground-truth stepping.
pub fn rk4_step_raw(
    x: &StateVector,
    input: &Vector4<f64>,
    params: &QuadParams,
    dt: f64,
) -> StateVector {
    rk4_step_map(|x| derivative_raw(x, input, params), x, dt)
}

/// Ground-truth integration step: RK4 followed by attitude renormalization
/// and canonicalization (scalar part non-negative).
pub fn integrate_rk4(
    state: &State,
    input: &Vector4<f64>,
    params: &QuadParams,
    dt: f64,
) -> Result<State, Error> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let mut x = rk4_step_raw(&state.to_vector(), input, params, dt);
    let q = quat::canonicalize(&x.fixed_rows::<4>(ATT).into_owned());
    x.fixed_rows_mut::<4>(ATT).copy_from(&q);
    Ok(State::from_vector(&x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{UnitQuaternion, Vector3};

    #[test]
    fn rejects_non_positive_dt() {
        let params = QuadParams::default();
        let state = State::hover(&params, Vector3::zeros());
        assert!(integrate_rk4(&state, &params.hover_thrusts(), &params, 0.0).is_err());
        assert!(integrate_rk4(&state, &params.hover_thrusts(), &params, -0.1).is_err());
    }

    #[test]
    fn vanishing_step_is_identity() {
        let params = QuadParams::default();
        let mut state = State::hover(&params, Vector3::new(0.3, -0.1, 1.5));
        state.body_rate = Vector3::new(0.5, -0.2, 1.0);
        let next = integrate_rk4(&state, &params.hover_thrusts(), &params, 1e-300).unwrap();
        assert_relative_eq!(next.position, state.position, epsilon = 1e-12);
        assert_relative_eq!(next.velocity, state.velocity, epsilon = 1e-12);
        assert!(next.attitude.angle_to(&state.attitude) < 1e-12);
    }

    #[test]
    fn free_fall_matches_ballistic_solution() {
        let params = QuadParams::default();
        let mut state = State::hover(&params, Vector3::zeros());
        state.rotor_thrust = Vector4::zeros();
        let dt = 1e-3;
        for _ in 0..1000 {
            state = integrate_rk4(&state, &Vector4::zeros(), &params, dt).unwrap();
        }
        let expected = -0.5 * params.gravity;
        assert_relative_eq!(state.position[2], expected, epsilon = 1e-6);
        assert_relative_eq!(state.velocity[2], -params.gravity, epsilon = 1e-9);
    }

    #[test]
    fn pure_spin_matches_axis_angle() {
        let params = QuadParams::default();
        let mut state = State::hover(&params, Vector3::zeros());
        state.body_rate = Vector3::new(0.0, 0.0, 5.0);
        let dt = 1e-3;
        for _ in 0..1000 {
            state = integrate_rk4(&state, &params.hover_thrusts(), &params, dt).unwrap();
        }
        let expected = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), 5.0);
        assert!(state.attitude.angle_to(&expected) < 1e-8);
        // Rates are untouched by a pure principal-axis spin.
        assert_relative_eq!(state.body_rate, Vector3::new(0.0, 0.0, 5.0), epsilon = 1e-9);
    }

    #[test]
    fn quaternion_norm_is_unit_after_each_step() {
        let params = QuadParams::default();
        let mut state = State::hover(&params, Vector3::zeros());
        state.body_rate = Vector3::new(3.0, -7.0, 12.0);
        for _ in 0..200 {
            state = integrate_rk4(&state, &params.hover_thrusts(), &params, 1e-3).unwrap();
            assert!((state.attitude.as_ref().norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_thrust_conserves_mechanical_energy() {
        let params = QuadParams::default();
        let mut state = State::hover(&params, Vector3::new(0.0, 0.0, 5.0));
        state.velocity = Vector3::new(2.0, -1.0, 3.0);
        state.body_rate = Vector3::new(1.0, 2.0, -0.5);
        state.rotor_thrust = Vector4::zeros();
        let energy = |s: &State| {
            0.5 * params.mass * s.velocity.norm_squared()
                + params.mass * params.gravity * s.position[2]
        };
        let e0 = energy(&state);
        for _ in 0..1000 {
            state = integrate_rk4(&state, &Vector4::zeros(), &params, 1e-3).unwrap();
        }
        assert_relative_eq!(energy(&state), e0, max_relative = 1e-6);
    }
}
