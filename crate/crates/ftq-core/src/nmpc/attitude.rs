//! Attitude error and its yaw / tilt decomposition.
//!
//! The attitude error `q_e = q_ref ∘ q^-1` is factored as `q_e = q_z ∘ q_xy`
//! where `q_z` only rotates about the inertial z axis (w and z components)
//! and `q_xy` only tilts (w, x, y components). The cost penalizes the tilt
//! components and, in nominal flight, the z component of the yaw factor.
//! Zeroing the yaw weight makes the cost exactly invariant under z rotations
//! of the error, which is what allows the post-failure spin.

use nalgebra::{SMatrix, UnitQuaternion, Vector3, Vector4};

use crate::quadmodel::quat;

/// Below this value of `sqrt(qe_w^2 + qe_z^2)` the yaw factor is ill-defined
/// (a pure 180-degree tilt) and the split degenerates to the identity yaw.
const DEGENERATE_S: f64 = 1e-9;

/// Attitude error split into commuting yaw and tilt factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeSplit {
    /// Full attitude error `q_ref ∘ q^-1`.
    pub error: UnitQuaternion<f64>,
    /// Rotation about z only (zero x, y components).
    pub yaw: UnitQuaternion<f64>,
    /// Tilt rotation (zero z component).
    pub tilt: UnitQuaternion<f64>,
}

pub(crate) fn error_raw(q_ref: &Vector4<f64>, q: &Vector4<f64>) -> Vector4<f64> {
    quat::mul(q_ref, &quat::conjugate(q))
}

pub(crate) fn split_raw(qe: &Vector4<f64>) -> (Vector4<f64>, Vector4<f64>) {
    let s = (qe[0] * qe[0] + qe[3] * qe[3]).sqrt();
    if s < DEGENERATE_S {
        return (Vector4::new(1.0, 0.0, 0.0, 0.0), *qe);
    }
    let yaw = Vector4::new(qe[0] / s, 0.0, 0.0, qe[3] / s);
    let tilt = quat::mul(&quat::conjugate(&yaw), qe);
    (yaw, tilt)
}

/// Split the attitude error between `q` and `q_ref`.
pub fn attitude_error_split(
    q: &UnitQuaternion<f64>,
    q_ref: &UnitQuaternion<f64>,
) -> AttitudeSplit {
    let qe = error_raw(&quat::from_unit(q_ref), &quat::from_unit(q));
    let (yaw, tilt) = split_raw(&qe);
    AttitudeSplit {
        error: quat::to_unit(&qe),
        yaw: quat::to_unit(&yaw),
        tilt: quat::to_unit(&tilt),
    }
}

/// Attitude residual entries `(q_xy_x, q_xy_y, q_z_z)` as a smooth function
/// of the raw state quaternion, together with the Jacobian with respect to
/// the four quaternion components.
pub(crate) fn attitude_residual_jacobian(
    q: &Vector4<f64>,
    q_ref: &Vector4<f64>,
) -> (Vector3<f64>, SMatrix<f64, 3, 4>) {
    let qe = error_raw(q_ref, q);
    let s2 = qe[0] * qe[0] + qe[3] * qe[3];
    let s = s2.sqrt();

    let mut d_de = SMatrix::<f64, 3, 4>::zeros();
    let residual;
    if s < DEGENERATE_S {
        residual = Vector3::new(qe[1], qe[2], 0.0);
        d_de[(0, 1)] = 1.0;
        d_de[(1, 2)] = 1.0;
    } else {
        let rx = (qe[0] * qe[1] + qe[3] * qe[2]) / s;
        let ry = (qe[0] * qe[2] - qe[3] * qe[1]) / s;
        let rz = qe[3] / s;
        residual = Vector3::new(rx, ry, rz);

        d_de[(0, 0)] = qe[1] / s - rx * qe[0] / s2;
        d_de[(0, 1)] = qe[0] / s;
        d_de[(0, 2)] = qe[3] / s;
        d_de[(0, 3)] = qe[2] / s - rx * qe[3] / s2;

        d_de[(1, 0)] = qe[2] / s - ry * qe[0] / s2;
        d_de[(1, 1)] = -qe[3] / s;
        d_de[(1, 2)] = qe[0] / s;
        d_de[(1, 3)] = -qe[1] / s - ry * qe[3] / s2;

        d_de[(2, 0)] = -rz * qe[0] / s2;
        d_de[(2, 3)] = 1.0 / s - qe[3] * qe[3] / (s2 * s);
    }

    // qe = L(q_ref) * conj(q): chain through the conjugation sign flips.
    let p = q_ref;
    #[rustfmt::skip]
    let left = SMatrix::<f64, 4, 4>::new(
        p[0], -p[1], -p[2], -p[3],
        p[1],  p[0], -p[3],  p[2],
        p[2],  p[3],  p[0], -p[1],
        p[3], -p[2],  p[1],  p[0],
    );
    let conj = SMatrix::<f64, 4, 4>::from_diagonal(&Vector4::new(1.0, -1.0, -1.0, -1.0));
    (residual, d_de * left * conj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Vector3 as V3;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn recompose(split: &AttitudeSplit) -> Vector4<f64> {
        quat::mul(&quat::from_unit(&split.yaw), &quat::from_unit(&split.tilt))
    }

    fn attitude_residual(q: &Vector4<f64>, q_ref: &Vector4<f64>) -> nalgebra::Vector3<f64> {
        attitude_residual_jacobian(q, q_ref).0
    }

    #[test]
    fn zero_error_splits_to_identities() {
        let q = UnitQuaternion::from_axis_angle(&V3::y_axis(), 0.4);
        let split = attitude_error_split(&q, &q);
        assert!(split.yaw.angle() < 1e-12);
        assert!(split.tilt.angle() < 1e-12);
        let r = attitude_residual(&quat::from_unit(&q), &quat::from_unit(&q));
        assert!(r.norm() < 1e-12);
    }

    #[test]
    fn pure_yaw_error_is_all_yaw() {
        let q = UnitQuaternion::identity();
        let q_ref = UnitQuaternion::from_axis_angle(&V3::z_axis(), FRAC_PI_2);
        let split = attitude_error_split(&q, &q_ref);
        assert!(split.error.angle_to(&split.yaw) < 1e-12);
        assert!(split.tilt.angle() < 1e-12);
        // Residual: zero tilt entries, yaw entry sin(45 deg).
        let r = attitude_residual(&quat::from_unit(&q), &quat::from_unit(&q_ref));
        assert_relative_eq!(r[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(r[1], 0.0, epsilon = 1e-12);
        assert_relative_eq!(r[2], (FRAC_PI_2 / 2.0).sin(), epsilon = 1e-12);
    }

    #[test]
    fn pure_roll_error_is_all_tilt() {
        let q = UnitQuaternion::identity();
        let q_ref = UnitQuaternion::from_axis_angle(&V3::x_axis(), FRAC_PI_2);
        let split = attitude_error_split(&q, &q_ref);
        assert!(split.yaw.angle() < 1e-12);
        assert!(split.error.angle_to(&split.tilt) < 1e-12);
    }

    #[test]
    fn degenerate_inverted_error_has_identity_yaw() {
        let q = UnitQuaternion::identity();
        let q_ref = UnitQuaternion::from_axis_angle(&V3::x_axis(), std::f64::consts::PI);
        let split = attitude_error_split(&q, &q_ref);
        assert!(split.yaw.angle() < 1e-12);
        let r = attitude_residual(&quat::from_unit(&q), &quat::from_unit(&q_ref));
        assert_relative_eq!(r.fixed_rows::<2>(0).norm(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(r[2], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn tilt_residual_monotone_in_tilt_angle() {
        // Pure xy-axis rotations: the squared tilt residual must not decrease
        // with the rotation angle on [0, pi].
        let axes = [
            V3::x_axis(),
            V3::y_axis(),
            nalgebra::Unit::new_normalize(V3::new(1.0, 1.0, 0.0)),
            nalgebra::Unit::new_normalize(V3::new(-0.3, 0.8, 0.0)),
        ];
        for axis in axes {
            let mut last = -1.0;
            for k in 0..=100 {
                let theta = std::f64::consts::PI * k as f64 / 100.0;
                let q_ref = UnitQuaternion::from_axis_angle(&axis, theta);
                let r = attitude_residual(
                    &quat::from_unit(&UnitQuaternion::identity()),
                    &quat::from_unit(&q_ref),
                );
                let tilt_sq = r[0] * r[0] + r[1] * r[1];
                assert!(tilt_sq >= last - 1e-12, "axis {axis:?} theta {theta}");
                last = tilt_sq;
            }
        }
    }

    #[test]
    fn residual_jacobian_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let h = 1e-7;
        for _ in 0..200 {
            let rand_q = |rng: &mut rand_chacha::ChaCha8Rng| {
                Vector4::from_fn(|_, _| rng.gen_range(-1.0..1.0)).normalize()
            };
            let q = rand_q(&mut rng);
            let q_ref = rand_q(&mut rng);
            let (_, jac) = attitude_residual_jacobian(&q, &q_ref);
            for col in 0..4 {
                let mut qp = q;
                let mut qm = q;
                qp[col] += h;
                qm[col] -= h;
                let fd = (attitude_residual(&qp, &q_ref) - attitude_residual(&qm, &q_ref))
                    / (2.0 * h);
                for row in 0..3 {
                    assert_relative_eq!(jac[(row, col)], fd[row], epsilon = 1e-6, max_relative = 1e-6);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn split_recomposes_to_error(
            a in prop::array::uniform4(-1.0f64..1.0),
            b in prop::array::uniform4(-1.0f64..1.0),
        ) {
            let qa = Vector4::from_column_slice(&a);
            let qb = Vector4::from_column_slice(&b);
            prop_assume!(qa.norm() > 1e-3 && qb.norm() > 1e-3);
            let q = quat::to_unit(&qa);
            let q_ref = quat::to_unit(&qb);
            let split = attitude_error_split(&q, &q_ref);
            let recomposed = recompose(&split);
            let qe = quat::from_unit(&split.error);
            prop_assert!((recomposed - qe).norm() < 1e-10);
            // Structural zeros of the factors.
            prop_assert!(split.yaw.i.abs() < 1e-12 && split.yaw.j.abs() < 1e-12);
            prop_assert!(split.tilt.k.abs() < 1e-12);
        }
    }
}
