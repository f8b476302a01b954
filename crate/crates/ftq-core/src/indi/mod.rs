//! Incremental nonlinear dynamic inversion inner loop.
//!
//! Converts the NMPC rotor commands into robustified commands: the desired
//! collective thrust and angular acceleration are recovered from the command
//! through the allocation model, the desired torque is rebuilt incrementally
//! from the filtered torque estimate and the filtered measured angular
//! acceleration, and the result is re-allocated through the (fault-reduced)
//! effectiveness matrix. Model errors that show up between estimated torque
//! and measured acceleration cancel out of the loop.

use nalgebra::{Vector3, Vector4};

use crate::quadmodel::{FaultStatus, QuadParams};
use crate::Error;

/// Shared low-pass filter state of the body-rate and torque channels.
///
/// Both channels run the identical first-order filter so their lags cancel
/// in the torque increment; the rate derivative is the backward difference
/// of the filtered rate. The first sample passes through unfiltered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndiFilter {
    omega_f: Vector3<f64>,
    tau_f: Vector3<f64>,
    omega_dot_f: Vector3<f64>,
    cutoff_hz: f64,
    initialized: bool,
}

impl IndiFilter {
    pub fn new(cutoff_hz: f64) -> Self {
        Self {
            omega_f: Vector3::zeros(),
            tau_f: Vector3::zeros(),
            omega_dot_f: Vector3::zeros(),
            cutoff_hz,
            initialized: false,
        }
    }

    /// Advance both channels by one sample of duration `dt`.
    pub fn update(&mut self, omega_meas: &Vector3<f64>, tau_est: &Vector3<f64>, dt: f64) {
        debug_assert!(dt > 0.0);
        if !self.initialized {
            self.omega_f = *omega_meas;
            self.tau_f = *tau_est;
            self.omega_dot_f = Vector3::zeros();
            self.initialized = true;
            return;
        }
        let tau_c = 1.0 / (std::f64::consts::TAU * self.cutoff_hz);
        let alpha = dt / (tau_c + dt);
        let prev = self.omega_f;
        self.omega_f += (omega_meas - self.omega_f) * alpha;
        self.tau_f += (tau_est - self.tau_f) * alpha;
        self.omega_dot_f = (self.omega_f - prev) / dt;
    }

    pub fn is_initialized(&self) -> bool {
        self.initialized
    }

    pub fn body_rate(&self) -> Vector3<f64> {
        self.omega_f
    }

    pub fn torque(&self) -> Vector3<f64> {
        self.tau_f
    }

    pub fn rate_derivative(&self) -> Vector3<f64> {
        self.omega_dot_f
    }

    #[cfg(test)]
    fn preset(omega: Vector3<f64>, tau: Vector3<f64>, omega_dot: Vector3<f64>) -> Self {
        Self {
            omega_f: omega,
            tau_f: tau,
            omega_dot_f: omega_dot,
            cutoff_hz: 12.0,
            initialized: true,
        }
    }
}

/// Body torque produced by the measured rotor thrusts, through the torque
/// rows of the effectiveness matrix.
pub fn estimate_torque(thrusts: &Vector4<f64>, params: &QuadParams) -> Vector3<f64> {
    params.torque_rows() * thrusts
}

/// Robustified per-rotor command.
///
/// With a failed rotor the allocation uses the Moore-Penrose pseudoinverse of
/// the effectiveness matrix with that column zeroed, which keeps the failed
/// command at exactly zero; the nominal path uses the exact inverse. The
/// output is clipped to the fault-aware thrust bounds.
pub fn indi_allocate(
    command: &Vector4<f64>,
    omega: &Vector3<f64>,
    filter: &IndiFilter,
    params: &QuadParams,
    fault: &FaultStatus,
) -> Result<Vector4<f64>, Error> {
    debug_assert!(filter.is_initialized());
    let g = params.effectiveness_matrix();
    let wrench = g * command;
    let thrust_d = wrench[0];
    let inertia = params.inertia_diag;
    let gyro = omega.cross(&inertia.component_mul(omega));
    let alpha_d = Vector3::new(wrench[1] - gyro[0], wrench[2] - gyro[1], wrench[3] - gyro[2])
        .component_div(&inertia);

    let tau_d = filter.torque() + inertia.component_mul(&(alpha_d - filter.rate_derivative()));
    let target = Vector4::new(thrust_d, tau_d[0], tau_d[1], tau_d[2]);

    let allocated = match fault.failed_rotor {
        Some(i) => {
            let mut reduced = g;
            reduced.set_column(i, &Vector4::zeros());
            let pinv = reduced
                .pseudo_inverse(1e-10)
                .map_err(|_| Error::SingularEffectiveness)?;
            pinv * target
        }
        None => {
            let inv = g.try_inverse().ok_or(Error::SingularEffectiveness)?;
            inv * target
        }
    };

    let (lo, hi) =
        crate::quadmodel::apply_fault_bounds(&params.thrust_lower(), &params.thrust_upper(), fault);
    let mut out = Vector4::from_fn(|i, _| allocated[i].clamp(lo[i], hi[i]));
    if let Some(i) = fault.failed_rotor {
        out[i] = 0.0;
    }
    Ok(out)
}
