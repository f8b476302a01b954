//! Scalar-first quaternion helpers on raw 4-vectors.
//!
//! The flight state stores the attitude as `(w, x, y, z)` inside a flat
//! vector, so the dynamics and the solver work on `Vector4` in that order
//! rather than on `nalgebra::Quaternion` (which stores the scalar last).
//! Conversions to `UnitQuaternion` are provided for the typed API.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3, Vector4};

/// Hamilton product `a ∘ b`, both scalar-first.
pub fn mul(a: &Vector4<f64>, b: &Vector4<f64>) -> Vector4<f64> {
    let (aw, ax, ay, az) = (a[0], a[1], a[2], a[3]);
    let (bw, bx, by, bz) = (b[0], b[1], b[2], b[3]);
    Vector4::new(
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by + ay * bw + az * bx - ax * bz,
        aw * bz + az * bw + ax * by - ay * bx,
    )
}

pub fn conjugate(q: &Vector4<f64>) -> Vector4<f64> {
    Vector4::new(q[0], -q[1], -q[2], -q[3])
}

/// Body-to-inertial rotation matrix in homogeneous form.
///
/// Every entry is quadratic in the components, so the map is smooth off the
/// unit sphere (the matrix scales with `|q|^2`). For unit quaternions this is
/// the ordinary rotation matrix.
pub fn rotation_matrix_hom(q: &Vector4<f64>) -> Matrix3<f64> {
    let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
    Matrix3::new(
        w * w + x * x - y * y - z * z,
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        w * w - x * x + y * y - z * z,
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        w * w - x * x - y * y + z * z,
    )
}

/// Third column of [`rotation_matrix_hom`]: the body thrust axis expressed in
/// the inertial frame (times `|q|^2`).
pub fn thrust_axis_hom(q: &Vector4<f64>) -> Vector3<f64> {
    let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
    Vector3::new(
        2.0 * (x * z + w * y),
        2.0 * (y * z - w * x),
        w * w - x * x - y * y + z * z,
    )
}

/// Normalize and flip so the scalar part is non-negative.
///
/// The sign convention avoids double-cover flips in logs and keeps metrics
/// stable; both signs represent the same rotation.
pub fn canonicalize(q: &Vector4<f64>) -> Vector4<f64> {
    let mut out = q / q.norm();
    if out[0] < 0.0 {
        out = -out;
    }
    out
}

pub fn from_unit(q: &UnitQuaternion<f64>) -> Vector4<f64> {
    Vector4::new(q.w, q.i, q.j, q.k)
}

/// Normalizing conversion into the typed representation.
pub fn to_unit(q: &Vector4<f64>) -> UnitQuaternion<f64> {
    UnitQuaternion::from_quaternion(Quaternion::new(q[0], q[1], q[2], q[3]))
}
