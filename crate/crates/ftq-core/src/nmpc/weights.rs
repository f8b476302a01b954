//! Diagonal cost weights for the tracking objective.

use nalgebra::{Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::Error;

/// Weights of the stage and terminal costs. All entries are non-negative;
/// the terminal set has no input weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub pos: Vector3<f64>,
    pub tilt: f64,
    pub yaw: f64,
    pub vel: Vector3<f64>,
    pub rate: Vector3<f64>,
    pub thrust: Vector4<f64>,
    pub input: Vector4<f64>,
    pub terminal_pos: Vector3<f64>,
    pub terminal_tilt: f64,
    pub terminal_yaw: f64,
    pub terminal_vel: Vector3<f64>,
    pub terminal_rate: Vector3<f64>,
    pub terminal_thrust: Vector4<f64>,
    /// Yaw-rate weight while a rotor is out. The yaw angle is relinquished
    /// entirely, but a small rate weight must remain: it balances the tilt
    /// cost at a finite spin rate, which is what makes the rotating
    /// equilibrium an attractor instead of an unbounded spin-up.
    pub fault_rate_z: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            pos: Vector3::new(20.0, 20.0, 20.0),
            tilt: 50.0,
            yaw: 5.0,
            vel: Vector3::new(1.0, 1.0, 1.0),
            rate: Vector3::new(0.5, 0.5, 0.1),
            thrust: Vector4::repeat(0.01),
            input: Vector4::repeat(0.01),
            terminal_pos: Vector3::new(40.0, 40.0, 40.0),
            terminal_tilt: 100.0,
            terminal_yaw: 10.0,
            terminal_vel: Vector3::new(2.0, 2.0, 2.0),
            terminal_rate: Vector3::new(1.0, 1.0, 0.2),
            terminal_thrust: Vector4::repeat(0.02),
            fault_rate_z: 0.1,
        }
    }
}

impl CostWeights {
    pub fn validate(&self) -> Result<(), Error> {
        let all = self
            .pos
            .iter()
            .chain(self.vel.iter())
            .chain(self.rate.iter())
            .chain(self.thrust.iter())
            .chain(self.input.iter())
            .chain(self.terminal_pos.iter())
            .chain(self.terminal_vel.iter())
            .chain(self.terminal_rate.iter())
            .chain(self.terminal_thrust.iter())
            .chain([
                &self.tilt,
                &self.yaw,
                &self.terminal_tilt,
                &self.terminal_yaw,
                &self.fault_rate_z,
            ])
            .all(|w| *w >= 0.0 && w.is_finite());
        if !all {
            return Err(Error::InvalidParams("cost weights must be finite and >= 0".into()));
        }
        Ok(())
    }

    /// Rotor-failure relaxation: the yaw angle is uncontrollable and its
    /// weight drops to zero; the yaw-rate weight drops to the small
    /// `fault_rate_z` so the sustained spin of the relaxed equilibrium is
    /// admitted but bounded.
    pub fn with_fault_relaxation(&self) -> Self {
        let mut w = *self;
        w.yaw = 0.0;
        w.terminal_yaw = 0.0;
        w.rate[2] = self.fault_rate_z;
        w.terminal_rate[2] = 2.0 * self.fault_rate_z;
        w
    }

    /// Uniform scaling of the whole objective (used by invariance tests).
    pub fn scaled(&self, factor: f64) -> Self {
        let mut w = *self;
        w.pos *= factor;
        w.tilt *= factor;
        w.yaw *= factor;
        w.vel *= factor;
        w.rate *= factor;
        w.thrust *= factor;
        w.input *= factor;
        w.terminal_pos *= factor;
        w.terminal_tilt *= factor;
        w.terminal_yaw *= factor;
        w.terminal_vel *= factor;
        w.terminal_rate *= factor;
        w.terminal_thrust *= factor;
        w
    }
}
