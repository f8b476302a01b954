//! Analytic Jacobians of the quadrotor dynamics and their propagation
//! through the RK4 shooting step.

use nalgebra::{Matrix3, SMatrix, Vector3, Vector4};

use crate::quadmodel::{derivative_raw, QuadParams, State, StateVector, ATT, POS, RATE, THRUST, VEL};
use crate::Error;

pub type StateJacobian = SMatrix<f64, 17, 17>;
pub type InputJacobian = SMatrix<f64, 17, 4>;

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v[2], v[1], v[2], 0.0, -v[0], -v[1], v[0], 0.0)
}

/// Continuous-time Jacobian of the state derivative with respect to the
/// state, evaluated on the raw layout (no unit-norm assumption).
pub(crate) fn state_jacobian_raw(x: &StateVector, params: &QuadParams) -> StateJacobian {
    let q = x.fixed_rows::<4>(ATT).into_owned();
    let w = x.fixed_rows::<3>(RATE).into_owned();
    let t = x.fixed_rows::<4>(THRUST).into_owned();
    let (qw, qx, qy, qz) = (q[0], q[1], q[2], q[3]);

    let mut a = StateJacobian::zeros();

    // dp'/dv
    for i in 0..3 {
        a[(POS + i, VEL + i)] = 1.0;
    }

    // dv'/dq: derivative of the homogeneous thrust axis times T/m.
    let tm = t.sum() / params.mass;
    let axis_jac = SMatrix::<f64, 3, 4>::new(
        2.0 * qy, 2.0 * qz, 2.0 * qw, 2.0 * qx, //
        -2.0 * qx, -2.0 * qw, 2.0 * qz, 2.0 * qy, //
        2.0 * qw, -2.0 * qx, -2.0 * qy, 2.0 * qz,
    );
    for r in 0..3 {
        for c in 0..4 {
            a[(VEL + r, ATT + c)] = tm * axis_jac[(r, c)];
        }
    }

    // dv'/dT_i: each rotor adds its share of the collective along the axis.
    let axis = crate::quadmodel::quat::thrust_axis_hom(&q) / params.mass;
    for r in 0..3 {
        for c in 0..4 {
            a[(VEL + r, THRUST + c)] = axis[r];
        }
    }

    // dq'/dq = 1/2 * right-multiplication matrix of (0, w).
    #[rustfmt::skip]
    let dq_dq = SMatrix::<f64, 4, 4>::new(
        0.0,  -w[0], -w[1], -w[2],
        w[0],  0.0,   w[2], -w[1],
        w[1], -w[2],  0.0,   w[0],
        w[2],  w[1], -w[0],  0.0,
    ) * 0.5;
    for r in 0..4 {
        for c in 0..4 {
            a[(ATT + r, ATT + c)] = dq_dq[(r, c)];
        }
    }

    // dq'/dw = 1/2 * left-multiplication matrix of q restricted to the
    // vector part.
    #[rustfmt::skip]
    let dq_dw = SMatrix::<f64, 4, 3>::new(
        -qx, -qy, -qz,
         qw, -qz,  qy,
         qz,  qw, -qx,
        -qy,  qx,  qw,
    ) * 0.5;
    for r in 0..4 {
        for c in 0..3 {
            a[(ATT + r, RATE + c)] = dq_dw[(r, c)];
        }
    }

    // dw'/dw = -Iv^-1 (skew(w) Iv - skew(Iv w))
    let inertia = params.inertia_diag;
    let iw = inertia.component_mul(&w);
    let m = skew(&w) * Matrix3::from_diagonal(&inertia) - skew(&iw);
    for r in 0..3 {
        for c in 0..3 {
            a[(RATE + r, RATE + c)] = -m[(r, c)] / inertia[r];
        }
    }

    // dw'/dT = Iv^-1 * torque rows of the effectiveness matrix.
    let torque_rows = params.torque_rows();
    for r in 0..3 {
        for c in 0..4 {
            a[(RATE + r, THRUST + c)] = torque_rows[(r, c)] / inertia[r];
        }
    }

    // dT'/dT = -1/sigma
    for i in 0..4 {
        a[(THRUST + i, THRUST + i)] = -1.0 / params.motor_tau;
    }

    a
}

/// Continuous-time input Jacobian (constant: only the motor lag sees `u`).
pub(crate) fn input_jacobian(params: &QuadParams) -> InputJacobian {
    let mut b = InputJacobian::zeros();
    for i in 0..4 {
        b[(THRUST + i, i)] = 1.0 / params.motor_tau;
    }
    b
}

/// Exact Jacobians of the continuous dynamics at a typed state.
pub fn linearize_dynamics(
    state: &State,
    _input: &Vector4<f64>,
    params: &QuadParams,
) -> Result<(StateJacobian, InputJacobian), Error> {
    let norm = state.attitude.as_ref().norm();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::NonUnitQuaternion(norm));
    }
    let x = state.to_vector();
    Ok((state_jacobian_raw(&x, params), input_jacobian(params)))
}

/// One RK4 shooting step together with its discrete sensitivities
/// `(x_next, d x_next / d x, d x_next / d u)`.
pub(crate) fn rk4_sensitivity(
    x: &StateVector,
    u: &Vector4<f64>,
    params: &QuadParams,
    dt: f64,
) -> (StateVector, StateJacobian, InputJacobian) {
    let b = input_jacobian(params);

    let k1 = derivative_raw(x, u, params);
    let x2 = x + k1 * (dt / 2.0);
    let k2 = derivative_raw(&x2, u, params);
    let x3 = x + k2 * (dt / 2.0);
    let k3 = derivative_raw(&x3, u, params);
    let x4 = x + k3 * dt;
    let k4 = derivative_raw(&x4, u, params);

    let a1 = state_jacobian_raw(x, params);
    let a2 = state_jacobian_raw(&x2, params);
    let a3 = state_jacobian_raw(&x3, params);
    let a4 = state_jacobian_raw(&x4, params);

    // Stage sensitivities w.r.t. the initial state.
    let dk1 = a1;
    let dk2 = a2 * (StateJacobian::identity() + dk1 * (dt / 2.0));
    let dk3 = a3 * (StateJacobian::identity() + dk2 * (dt / 2.0));
    let dk4 = a4 * (StateJacobian::identity() + dk3 * dt);
    let ad = StateJacobian::identity() + (dk1 + dk2 * 2.0 + dk3 * 2.0 + dk4) * (dt / 6.0);

    // Stage sensitivities w.r.t. the (held) input.
    let e1 = b;
    let e2 = b + a2 * e1 * (dt / 2.0);
    let e3 = b + a3 * e2 * (dt / 2.0);
    let e4 = b + a4 * e3 * dt;
    let bd = (e1 + e2 * 2.0 + e3 * 2.0 + e4) * (dt / 6.0);

    let x_next = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    (x_next, ad, bd)
}

/// Shooting map over one node interval as `substeps` chained RK4 steps,
/// with the input held and the sensitivities composed.
pub(crate) fn shooting_sensitivity(
    x: &StateVector,
    u: &Vector4<f64>,
    params: &QuadParams,
    dt: f64,
    substeps: usize,
) -> (StateVector, StateJacobian, InputJacobian) {
    let h = dt / substeps.max(1) as f64;
    let (mut x_cur, mut ad, mut bd) = rk4_sensitivity(x, u, params, h);
    for _ in 1..substeps.max(1) {
        let (x_next, a_step, b_step) = rk4_sensitivity(&x_cur, u, params, h);
        x_cur = x_next;
        bd = a_step * bd + b_step;
        ad = a_step * ad;
    }
    (x_cur, ad, bd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadmodel::{random_unit_quaternion, rk4_step_raw};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(rng: &mut ChaCha8Rng, params: &QuadParams) -> (StateVector, Vector4<f64>) {
        let mut state = State::hover(params, Vector3::from_fn(|_, _| rng.gen_range(-5.0..5.0)));
        state.velocity = Vector3::from_fn(|_, _| rng.gen_range(-5.0..5.0));
        state.attitude = random_unit_quaternion(rng);
        state.body_rate = Vector3::from_fn(|_, _| rng.gen_range(-15.0..15.0));
        state.rotor_thrust = Vector4::from_fn(|_, _| rng.gen_range(0.0..8.5));
        let u = Vector4::from_fn(|_, _| rng.gen_range(0.0..8.5));
        (state.to_vector(), u)
    }

    #[test]
    fn position_block_is_identity() {
        let params = QuadParams::default();
        let state = State::hover(&params, Vector3::zeros());
        let (a, _) = linearize_dynamics(&state, &params.hover_thrusts(), &params).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_eq!(a[(POS + i, VEL + j)], expected);
            }
        }
    }

    #[test]
    fn motor_lag_entries() {
        let params = QuadParams::default();
        let state = State::hover(&params, Vector3::zeros());
        let (a, b) = linearize_dynamics(&state, &params.hover_thrusts(), &params).unwrap();
        for i in 0..4 {
            assert_relative_eq!(a[(THRUST + i, THRUST + i)], -1.0 / params.motor_tau);
            assert_relative_eq!(b[(THRUST + i, i)], 1.0 / params.motor_tau);
        }
    }

    #[test]
    fn jacobians_match_central_differences() {
        let params = QuadParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let h = 1e-6;
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let (x, u) = random_state(&mut rng, &params);
            let a = state_jacobian_raw(&x, &params);
            let b = input_jacobian(&params);
            for col in 0..17 {
                let mut xp = x;
                let mut xm = x;
                xp[col] += h;
                xm[col] -= h;
                let fd =
                    (derivative_raw(&xp, &u, &params) - derivative_raw(&xm, &u, &params)) / (2.0 * h);
                for row in 0..17 {
                    let scale = fd[row].abs().max(1.0);
                    worst = worst.max((a[(row, col)] - fd[row]).abs() / scale);
                }
            }
            for col in 0..4 {
                let mut up = u;
                let mut um = u;
                up[col] += h;
                um[col] -= h;
                let fd =
                    (derivative_raw(&x, &up, &params) - derivative_raw(&x, &um, &params)) / (2.0 * h);
                for row in 0..17 {
                    let scale = fd[row].abs().max(1.0);
                    worst = worst.max((b[(row, col)] - fd[row]).abs() / scale);
                }
            }
        }
        assert!(worst < 1e-5, "worst relative Jacobian error {worst}");
    }

    #[test]
    fn discrete_sensitivity_matches_step_differences() {
        let params = QuadParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let dt = 0.05;
        let h = 1e-6;
        for _ in 0..20 {
            let (x, u) = random_state(&mut rng, &params);
            let (x_next, ad, bd) = rk4_sensitivity(&x, &u, &params, dt);
            assert_relative_eq!(x_next, rk4_step_raw(&x, &u, &params, dt), epsilon = 1e-12);
            for col in 0..17 {
                let mut xp = x;
                let mut xm = x;
                xp[col] += h;
                xm[col] -= h;
                let fd = (rk4_step_raw(&xp, &u, &params, dt) - rk4_step_raw(&xm, &u, &params, dt))
                    / (2.0 * h);
                for row in 0..17 {
                    assert!(
                        (ad[(row, col)] - fd[row]).abs() < 1e-4 * fd[row].abs().max(1.0),
                        "Ad({row},{col}) {} vs {}",
                        ad[(row, col)],
                        fd[row]
                    );
                }
            }
            for col in 0..4 {
                let mut up = u;
                let mut um = u;
                up[col] += h;
                um[col] -= h;
                let fd = (rk4_step_raw(&x, &up, &params, dt) - rk4_step_raw(&x, &um, &params, dt))
                    / (2.0 * h);
                for row in 0..17 {
                    assert!(
                        (bd[(row, col)] - fd[row]).abs() < 1e-4 * fd[row].abs().max(1.0),
                        "Bd({row},{col}) {} vs {}",
                        bd[(row, col)],
                        fd[row]
                    );
                }
            }
        }
    }
}
