//! Physical vehicle parameters, thrust/torque allocation and fault bounds.

use nalgebra::{Matrix4, SMatrix, Vector2, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::Error;

/// Physical constants of the quadrotor.
///
/// Rotor positions are planar body-frame offsets of each rotor from the
/// center of gravity. The drag-torque sign pattern is fixed by the spin
/// directions: rotors 1 and 2 produce `-kappa_t * T` about body z, rotors
/// 3 and 4 produce `+kappa_t * T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadParams {
    /// Total mass [kg].
    pub mass: f64,
    /// Principal-axis diagonal inertia [kg m^2].
    pub inertia_diag: Vector3<f64>,
    /// Planar rotor positions in the body frame [m].
    pub rotor_pos: [Vector2<f64>; 4],
    /// Thrust-to-drag-torque factor [m].
    pub kappa_t: f64,
    /// Per-rotor minimum thrust [N].
    pub thrust_min: f64,
    /// Per-rotor maximum thrust [N].
    pub thrust_max: f64,
    /// Motor thrust lag time constant [s].
    pub motor_tau: f64,
    /// Gravitational acceleration [m/s^2], acting along -z inertial.
    pub gravity: f64,
}

impl Default for QuadParams {
    fn default() -> Self {
        Self {
            mass: 0.75,
            inertia_diag: Vector3::new(2.5e-3, 2.5e-3, 4.3e-3),
            // Symmetric X layout; rotors 1/2 and 3/4 are the diagonal pairs.
            rotor_pos: [
                Vector2::new(0.088, -0.088),
                Vector2::new(-0.088, 0.088),
                Vector2::new(0.088, 0.088),
                Vector2::new(-0.088, -0.088),
            ],
            kappa_t: 0.012,
            thrust_min: 0.0,
            thrust_max: 8.5,
            motor_tau: 0.033,
            gravity: 9.81,
        }
    }
}

impl QuadParams {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.mass > 0.0) {
            return Err(Error::InvalidParams("mass must be positive".into()));
        }
        if !self.inertia_diag.iter().all(|v| *v > 0.0) {
            return Err(Error::InvalidParams("inertia entries must be positive".into()));
        }
        if !(self.motor_tau > 0.0) {
            return Err(Error::InvalidParams("motor_tau must be positive".into()));
        }
        if !(0.0 <= self.thrust_min && self.thrust_min <= self.thrust_max) {
            return Err(Error::InvalidParams(
                "thrust bounds must satisfy 0 <= thrust_min <= thrust_max".into(),
            ));
        }
        if !(self.gravity > 0.0) {
            return Err(Error::InvalidParams("gravity must be positive".into()));
        }
        let max_ry = self.rotor_pos.iter().map(|r| r[1].abs()).fold(0.0, f64::max);
        let max_rx = self.rotor_pos.iter().map(|r| r[0].abs()).fold(0.0, f64::max);
        if max_ry == 0.0 || max_rx == 0.0 {
            return Err(Error::InvalidParams(
                "rotor layout produces a zero roll or pitch allocation row".into(),
            ));
        }
        Ok(())
    }

    /// Control effectiveness matrix mapping rotor thrusts to collective
    /// thrust and body torques: rows are `(T, tau_x, tau_y, tau_z)`.
    pub fn effectiveness_matrix(&self) -> Matrix4<f64> {
        let r = &self.rotor_pos;
        let k = self.kappa_t;
        Matrix4::new(
            1.0, 1.0, 1.0, 1.0, //
            r[0][1], r[1][1], r[2][1], r[3][1], //
            -r[0][0], -r[1][0], -r[2][0], -r[3][0], //
            -k, -k, k, k,
        )
    }

    /// Torque rows (2..4) of the effectiveness matrix.
    pub fn torque_rows(&self) -> SMatrix<f64, 3, 4> {
        self.effectiveness_matrix().fixed_view::<3, 4>(1, 0).into_owned()
    }

    /// Per-rotor thrust that balances gravity with a level attitude [N].
    pub fn hover_thrust(&self) -> f64 {
        self.mass * self.gravity / 4.0
    }

    pub fn hover_thrusts(&self) -> Vector4<f64> {
        Vector4::repeat(self.hover_thrust())
    }

    /// Hover thrust split with one rotor out: the three healthy rotors carry
    /// the weight equally as a cost anchor (the actual spinning equilibrium
    /// is found by the optimizer).
    pub fn hover_thrusts_faulted(&self, failed_rotor: usize) -> Vector4<f64> {
        let share = self.mass * self.gravity / 3.0;
        let mut t = Vector4::repeat(share);
        t[failed_rotor] = 0.0;
        t
    }

    pub fn thrust_lower(&self) -> Vector4<f64> {
        Vector4::repeat(self.thrust_min)
    }

    pub fn thrust_upper(&self) -> Vector4<f64> {
        Vector4::repeat(self.thrust_max)
    }
}

/// Which rotor (if any) has failed, and when.
///
/// Indices are zero-based internally; the CLI surfaces the conventional
/// one-based rotor numbers. Timing is interpreted by the simulation harness;
/// the controller-side updates treat a `Some` index as active.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultStatus {
    /// Failed rotor index in 0..4, if any.
    pub failed_rotor: Option<usize>,
    /// Simulation time of the trigger [s].
    pub fault_time: f64,
}

impl FaultStatus {
    pub fn none() -> Self {
        Self { failed_rotor: None, fault_time: 0.0 }
    }

    pub fn rotor(index: usize, fault_time: f64) -> Self {
        Self { failed_rotor: Some(index), fault_time }
    }

    pub fn validate(&self) -> Result<(), Error> {
        match self.failed_rotor {
            Some(i) if i >= 4 => Err(Error::InvalidArgument(format!(
                "failed rotor index {i} out of range 0..4"
            ))),
            _ => Ok(()),
        }
    }

    pub fn is_active(&self) -> bool {
        self.failed_rotor.is_some()
    }
}

/// Zero out the bounds of the failed rotor so the optimizer knows it cannot
/// generate thrust. Healthy entries are untouched.
pub fn apply_fault_bounds(
    lower: &Vector4<f64>,
    upper: &Vector4<f64>,
    fault: &FaultStatus,
) -> (Vector4<f64>, Vector4<f64>) {
    let mut lo = *lower;
    let mut hi = *upper;
    if let Some(i) = fault.failed_rotor {
        lo[i] = 0.0;
        hi[i] = 0.0;
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn symmetric_layout_cancels_torques() {
        let p = QuadParams::default();
        let g = p.effectiveness_matrix();
        let th = 2.0;
        let wrench = g * Vector4::repeat(th);
        assert_relative_eq!(wrench[0], 4.0 * th, epsilon = 1e-12);
        assert_relative_eq!(wrench[1], 0.0, epsilon = 1e-12);
        assert_relative_eq!(wrench[2], 0.0, epsilon = 1e-12);
        assert_relative_eq!(wrench[3], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn single_rotor_wrench_is_first_column() {
        let p = QuadParams::default();
        let g = p.effectiveness_matrix();
        let t1 = 3.0;
        let wrench = g * Vector4::new(t1, 0.0, 0.0, 0.0);
        assert_relative_eq!(wrench[0], t1, epsilon = 1e-12);
        assert_relative_eq!(wrench[1], p.rotor_pos[0][1] * t1, epsilon = 1e-12);
        assert_relative_eq!(wrench[2], -p.rotor_pos[0][0] * t1, epsilon = 1e-12);
        assert_relative_eq!(wrench[3], -p.kappa_t * t1, epsilon = 1e-12);
    }

    #[test]
    fn drag_torque_sign_pattern() {
        let p = QuadParams::default();
        let g = p.effectiveness_matrix();
        let k = p.kappa_t;
        assert_eq!(g[(3, 0)], -k);
        assert_eq!(g[(3, 1)], -k);
        assert_eq!(g[(3, 2)], k);
        assert_eq!(g[(3, 3)], k);
    }

    #[test]
    fn effectiveness_is_invertible() {
        let p = QuadParams::default();
        assert!(p.effectiveness_matrix().try_inverse().is_some());
    }

    #[test]
    fn fault_bounds_zero_only_failed_rotor() {
        let p = QuadParams::default();
        let (lo, hi) = apply_fault_bounds(
            &p.thrust_lower(),
            &p.thrust_upper(),
            &FaultStatus::rotor(0, 3.0),
        );
        assert_eq!(lo[0], 0.0);
        assert_eq!(hi[0], 0.0);
        for i in 1..4 {
            assert_eq!(lo[i], p.thrust_min);
            assert_eq!(hi[i], p.thrust_max);
        }

        let (lo, hi) = apply_fault_bounds(&p.thrust_lower(), &p.thrust_upper(), &FaultStatus::none());
        assert_eq!(lo, p.thrust_lower());
        assert_eq!(hi, p.thrust_upper());

        let (lo, hi) = apply_fault_bounds(
            &p.thrust_lower(),
            &p.thrust_upper(),
            &FaultStatus::rotor(2, 0.0),
        );
        assert_eq!(lo[2], 0.0);
        assert_eq!(hi[2], 0.0);
        assert_eq!(hi[0], p.thrust_max);
        assert_eq!(hi[1], p.thrust_max);
        assert_eq!(hi[3], p.thrust_max);
    }

    #[test]
    fn validation_rejects_bad_params() {
        let mut p = QuadParams::default();
        p.mass = 0.0;
        assert!(p.validate().is_err());

        let mut p = QuadParams::default();
        p.thrust_min = 1.0;
        p.thrust_max = 0.5;
        assert!(p.validate().is_err());

        let mut p = QuadParams::default();
        p.rotor_pos = [Vector2::new(0.1, 0.0); 4];
        assert!(p.validate().is_err());

        assert!(QuadParams::default().validate().is_ok());
    }
}
