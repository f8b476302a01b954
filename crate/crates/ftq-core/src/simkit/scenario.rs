//! Scenario descriptions, reference trajectories and mismatch injection.

use nalgebra::{UnitQuaternion, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::nmpc::ReferencePoint;
use crate::quadmodel::{FaultStatus, QuadParams};
use crate::Error;

/// Closed-loop experiment family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Rotor failure triggered mid-hover.
    HoverFail,
    /// Recovery from a uniformly random initial orientation, failure at t=0.
    RandomAttitude,
    /// Figure-eight tracking with a failed rotor.
    Lemniscate,
    /// Recovery from an upside-down attitude, failure at t=0.
    InvertedRecovery,
    /// Failure while flying a fast circle.
    CircleFail,
    /// Failure during constant-velocity forward flight.
    ForwardFlightFail,
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::HoverFail => "hover_fail",
            Self::RandomAttitude => "random_attitude",
            Self::Lemniscate => "lemniscate",
            Self::InvertedRecovery => "inverted_recovery",
            Self::CircleFail => "circle_fail",
            Self::ForwardFlightFail => "forward_flight_fail",
        }
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "hover_fail" => Ok(Self::HoverFail),
            "random_attitude" => Ok(Self::RandomAttitude),
            "lemniscate" => Ok(Self::Lemniscate),
            "inverted_recovery" => Ok(Self::InvertedRecovery),
            "circle_fail" => Ok(Self::CircleFail),
            "forward_flight_fail" => Ok(Self::ForwardFlightFail),
            other => Err(Error::InvalidConfig(format!("unknown scenario '{other}'"))),
        }
    }
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Deliberate plant-vs-controller model errors. The true plant uses the
/// perturbed parameters and feels the external torque; the controller and
/// the INDI loop keep the nominal model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MismatchConfig {
    /// Fractional mass error of the true plant.
    pub mass_error: f64,
    /// Center-of-gravity shift [m]; moves every true rotor position by the
    /// opposite amount.
    pub cog_offset: Vector2<f64>,
    /// Fractional torque-coefficient error.
    pub kappa_error: f64,
    /// Constant body-frame disturbance torque [N m].
    pub external_torque: Vector3<f64>,
    /// Standard deviation of the thrust measurement noise [N].
    pub thrust_noise_std: f64,
}

impl Default for MismatchConfig {
    fn default() -> Self {
        Self {
            mass_error: 0.0,
            cog_offset: Vector2::zeros(),
            kappa_error: 0.0,
            external_torque: Vector3::zeros(),
            thrust_noise_std: 0.0,
        }
    }
}

impl MismatchConfig {
    /// True-plant parameters implied by the mismatch.
    pub fn perturb(&self, nominal: &QuadParams) -> QuadParams {
        let mut p = *nominal;
        p.mass *= 1.0 + self.mass_error;
        p.kappa_t *= 1.0 + self.kappa_error;
        for r in &mut p.rotor_pos {
            *r -= self.cog_offset;
        }
        p
    }
}

/// When a run counts as recovered: tilt and planar error below threshold,
/// held continuously for the hold time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecoveryThresholds {
    /// Maximum tilt angle [rad].
    pub tilt: f64,
    /// Maximum planar distance from the reference [m].
    pub xy_error: f64,
    /// Required hold duration [s].
    pub hold: f64,
}

impl Default for RecoveryThresholds {
    fn default() -> Self {
        Self { tilt: 25f64.to_radians(), xy_error: 0.3, hold: 0.5 }
    }
}

/// Full description of one closed-loop experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    /// Total simulated time [s].
    pub duration: f64,
    pub fault: FaultStatus,
    pub seed: u64,
    pub controller_rate_hz: u32,
    pub sim_rate_hz: u32,
    pub mismatch: MismatchConfig,
    pub recovery: RecoveryThresholds,
    /// Hover / trajectory altitude [m].
    pub altitude: f64,
    /// Lemniscate speed parameter [rad/s].
    pub lemniscate_omega: f64,
    /// Hover lead-in before the lemniscate starts [s].
    pub lemniscate_start: f64,
    pub circle_radius: f64,
    pub circle_speed: f64,
    pub forward_speed: f64,
    /// Initial roll rate of the inverted-recovery scenario [rad/s].
    pub flip_rate: f64,
    /// Optional overrides of the kind-specific initial state.
    pub initial_position: Option<Vector3<f64>>,
    pub initial_attitude: Option<UnitQuaternion<f64>>,
}

impl ScenarioConfig {
    /// Kind-specific defaults.
    pub fn preset(kind: ScenarioKind) -> Self {
        let base = Self {
            kind,
            duration: 10.0,
            fault: FaultStatus::rotor(0, 3.0),
            seed: 0,
            controller_rate_hz: 150,
            // Closest integer multiple of the control rate to 1 kHz.
            sim_rate_hz: 1050,
            mismatch: MismatchConfig::default(),
            recovery: RecoveryThresholds::default(),
            altitude: 2.0,
            lemniscate_omega: 0.3535,
            lemniscate_start: 3.0,
            circle_radius: 5.0,
            circle_speed: 7.5,
            forward_speed: 5.0,
            flip_rate: 0.0,
            initial_position: None,
            initial_attitude: None,
        };
        match kind {
            ScenarioKind::HoverFail => base,
            ScenarioKind::RandomAttitude => Self {
                duration: 4.0,
                fault: FaultStatus::rotor(0, 0.0),
                ..base
            },
            ScenarioKind::Lemniscate => Self {
                duration: 24.0,
                fault: FaultStatus::rotor(0, 0.0),
                ..base
            },
            ScenarioKind::InvertedRecovery => Self {
                duration: 6.0,
                fault: FaultStatus::rotor(0, 0.0),
                altitude: 4.0,
                ..base
            },
            ScenarioKind::CircleFail => Self {
                duration: 12.0,
                fault: FaultStatus::rotor(0, 4.0),
                ..base
            },
            ScenarioKind::ForwardFlightFail => Self {
                duration: 10.0,
                fault: FaultStatus::rotor(0, 1.0),
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.fault.validate()?;
        if !(self.duration > 0.0) {
            return Err(Error::InvalidConfig("duration must be positive".into()));
        }
        if self.controller_rate_hz == 0 || self.sim_rate_hz == 0 {
            return Err(Error::InvalidConfig("rates must be positive".into()));
        }
        if self.sim_rate_hz % self.controller_rate_hz != 0 {
            return Err(Error::InvalidConfig(
                "sim rate must be an integer multiple of the controller rate".into(),
            ));
        }
        if self.fault.is_active() && self.fault.fault_time >= self.duration {
            return Err(Error::InvalidConfig("fault time must fall inside the duration".into()));
        }
        if !(self.lemniscate_omega > 0.0) && self.kind == ScenarioKind::Lemniscate {
            return Err(Error::InvalidConfig("lemniscate omega must be positive".into()));
        }
        if self.kind == ScenarioKind::CircleFail && !(self.circle_radius > 0.0) {
            return Err(Error::InvalidConfig("circle radius must be positive".into()));
        }
        if self.mismatch.thrust_noise_std < 0.0 {
            return Err(Error::InvalidConfig("thrust noise must be non-negative".into()));
        }
        Ok(())
    }

    pub fn control_period(&self) -> f64 {
        1.0 / self.controller_rate_hz as f64
    }

    pub fn sim_period(&self) -> f64 {
        1.0 / self.sim_rate_hz as f64
    }

    pub fn steps_per_control(&self) -> usize {
        (self.sim_rate_hz / self.controller_rate_hz) as usize
    }
}

/// Figure-eight reference: `x = 4 sin(w t)`, `y = 2 sin(2 w t)` at constant
/// altitude, with the velocity from the analytic derivative and a level
/// attitude.
pub fn lemniscate_reference(
    t: f64,
    omega: f64,
    altitude: f64,
    params: &QuadParams,
) -> ReferencePoint {
    let mut r = ReferencePoint::hover(params, Vector3::new(
        4.0 * (omega * t).sin(),
        2.0 * (2.0 * omega * t).sin(),
        altitude,
    ));
    r.velocity = Vector3::new(
        4.0 * omega * (omega * t).cos(),
        4.0 * omega * (2.0 * omega * t).cos(),
        0.0,
    );
    r
}

/// Constant-speed circle of the given radius, starting at `(radius, 0)`.
pub fn circle_reference(
    t: f64,
    radius: f64,
    speed: f64,
    altitude: f64,
    params: &QuadParams,
) -> ReferencePoint {
    let rate = speed / radius;
    let a = rate * t;
    let mut r = ReferencePoint::hover(
        params,
        Vector3::new(radius * a.cos(), radius * a.sin(), altitude),
    );
    r.velocity = Vector3::new(-speed * a.sin(), speed * a.cos(), 0.0);
    r
}

/// Constant-velocity straight line along +x.
pub fn forward_reference(t: f64, speed: f64, altitude: f64, params: &QuadParams) -> ReferencePoint {
    let mut r = ReferencePoint::hover(params, Vector3::new(speed * t, 0.0, altitude));
    r.velocity = Vector3::new(speed, 0.0, 0.0);
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lemniscate_at_zero() {
        let params = QuadParams::default();
        let omega = 0.5;
        let r = lemniscate_reference(0.0, omega, 1.5, &params);
        assert_relative_eq!(r.position, Vector3::new(0.0, 0.0, 1.5), epsilon = 1e-12);
        assert_relative_eq!(
            r.velocity,
            Vector3::new(4.0 * omega, 4.0 * omega, 0.0),
            epsilon = 1e-12
        );
        assert_relative_eq!(r.velocity.norm(), 4.0 * omega * 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn lemniscate_peak_speeds_match_published_settings() {
        let params = QuadParams::default();
        for (omega, target) in [(0.3535, 2.0), (0.8838, 5.0)] {
            let period = std::f64::consts::TAU / omega;
            let peak = (0..20_000)
                .map(|i| {
                    lemniscate_reference(period * i as f64 / 20_000.0, omega, 2.0, &params)
                        .velocity
                        .norm()
                })
                .fold(0.0, f64::max);
            assert!(
                (peak - target).abs() / target < 0.005,
                "omega {omega}: peak speed {peak} vs {target}"
            );
        }
    }

    #[test]
    fn circle_and_forward_speeds() {
        let params = QuadParams::default();
        let r = circle_reference(0.0, 5.0, 7.5, 2.0, &params);
        assert_relative_eq!(r.position, Vector3::new(5.0, 0.0, 2.0), epsilon = 1e-12);
        assert_relative_eq!(r.velocity.norm(), 7.5, epsilon = 1e-12);
        for t in [0.0, 0.7, 2.3] {
            let r = circle_reference(t, 5.0, 7.5, 2.0, &params);
            assert_relative_eq!(r.position.fixed_rows::<2>(0).norm(), 5.0, epsilon = 1e-12);
            assert_relative_eq!(r.velocity.norm(), 7.5, epsilon = 1e-12);
        }

        let f = forward_reference(2.0, 5.0, 2.0, &params);
        assert_relative_eq!(f.position, Vector3::new(10.0, 0.0, 2.0), epsilon = 1e-12);
        assert_relative_eq!(f.velocity, Vector3::new(5.0, 0.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn validation_catches_rate_mismatch() {
        let mut cfg = ScenarioConfig::preset(ScenarioKind::HoverFail);
        assert!(cfg.validate().is_ok());
        cfg.sim_rate_hz = 1000;
        assert!(cfg.validate().is_err());
        cfg.sim_rate_hz = 1050;
        cfg.fault.fault_time = 99.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn scenario_names_round_trip() {
        for kind in [
            ScenarioKind::HoverFail,
            ScenarioKind::RandomAttitude,
            ScenarioKind::Lemniscate,
            ScenarioKind::InvertedRecovery,
            ScenarioKind::CircleFail,
            ScenarioKind::ForwardFlightFail,
        ] {
            let parsed: ScenarioKind = kind.name().parse().unwrap();
            assert_eq!(parsed, kind);
        }
        assert!("warp_drive".parse::<ScenarioKind>().is_err());
    }
}
