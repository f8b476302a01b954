//! Flight state and its flat-vector representation.

use nalgebra::{SVector, UnitQuaternion, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use super::dynamics::{ATT, POS, RATE, THRUST, VEL};
use super::params::QuadParams;
use super::quat;

pub const STATE_DIM: usize = 17;

/// Flat state layout: position (0..3), velocity (3..6), attitude quaternion
/// w-first (6..10), body rates (10..13), rotor thrusts (13..17).
pub type StateVector = SVector<f64, STATE_DIM>;

/// Full simulation / prediction state of the vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    /// Inertial position [m].
    pub position: Vector3<f64>,
    /// Inertial velocity [m/s].
    pub velocity: Vector3<f64>,
    /// Body-to-inertial attitude.
    pub attitude: UnitQuaternion<f64>,
    /// Body rates [rad/s].
    pub body_rate: Vector3<f64>,
    /// Actual rotor thrusts [N].
    pub rotor_thrust: Vector4<f64>,
}

impl State {
    /// Level hover at `position` with the thrust states at their hover value.
    pub fn hover(params: &QuadParams, position: Vector3<f64>) -> Self {
        Self {
            position,
            velocity: Vector3::zeros(),
            attitude: UnitQuaternion::identity(),
            body_rate: Vector3::zeros(),
            rotor_thrust: params.hover_thrusts(),
        }
    }

    pub fn to_vector(&self) -> StateVector {
        let mut x = StateVector::zeros();
        x.fixed_rows_mut::<3>(POS).copy_from(&self.position);
        x.fixed_rows_mut::<3>(VEL).copy_from(&self.velocity);
        x.fixed_rows_mut::<4>(ATT).copy_from(&quat::from_unit(&self.attitude));
        x.fixed_rows_mut::<3>(RATE).copy_from(&self.body_rate);
        x.fixed_rows_mut::<4>(THRUST).copy_from(&self.rotor_thrust);
        x
    }

    /// Rebuild from the flat layout, normalizing the attitude.
    pub fn from_vector(x: &StateVector) -> Self {
        let q = quat::canonicalize(&x.fixed_rows::<4>(ATT).into_owned());
        Self {
            position: x.fixed_rows::<3>(POS).into_owned(),
            velocity: x.fixed_rows::<3>(VEL).into_owned(),
            attitude: quat::to_unit(&q),
            body_rate: x.fixed_rows::<3>(RATE).into_owned(),
            rotor_thrust: x.fixed_rows::<4>(THRUST).into_owned(),
        }
    }

    /// Body thrust axis expressed in the inertial frame.
    pub fn thrust_axis(&self) -> Vector3<f64> {
        self.attitude * Vector3::z()
    }

    /// Angle between the body thrust axis and the inertial vertical [rad].
    pub fn tilt_angle(&self) -> f64 {
        self.thrust_axis()[2].clamp(-1.0, 1.0).acos()
    }
}
