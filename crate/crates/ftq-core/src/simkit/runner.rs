//! Closed-loop execution of one scenario.
//!
//! The true plant integrates at the simulation rate with the (possibly
//! perturbed) physical parameters; the controller runs at the control rate
//! with the nominal model and zero-order-hold commands. At the fault time the
//! plant loses the rotor, the controller gets its online parameter update,
//! and recovery scenarios switch to a stationary reference at the planar
//! failure location and the pre-failure reference altitude.

use nalgebra::{UnitQuaternion, Vector3, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::indi::{estimate_torque, indi_allocate, IndiFilter};
use crate::nmpc::{
    build_reference, CostWeights, OcpProblem, OcpSettings, ReferencePoint, ReferenceSource,
    RtiController, SolveStatus,
};
use crate::quadmodel::{
    random_unit_quaternion, rk4_step_map, FaultStatus, QuadParams, State, ATT, RATE,
};
use crate::Error;

use super::metrics::{compute_metrics, Metrics};
use super::scenario::{
    circle_reference, forward_reference, lemniscate_reference, ScenarioConfig, ScenarioKind,
};

/// Inner-loop configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndiSettings {
    pub enabled: bool,
    /// Shared low-pass cutoff of both filter channels [Hz].
    pub cutoff_hz: f64,
}

impl Default for IndiSettings {
    fn default() -> Self {
        Self { enabled: true, cutoff_hz: 12.0 }
    }
}

/// Controller-side configuration shared by every scenario of a campaign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSetup {
    pub quad: QuadParams,
    pub weights: CostWeights,
    pub ocp: OcpSettings,
    pub indi: IndiSettings,
}

impl Default for SimSetup {
    fn default() -> Self {
        Self {
            quad: QuadParams::default(),
            weights: CostWeights::default(),
            ocp: OcpSettings::default(),
            indi: IndiSettings::default(),
        }
    }
}

/// One controller-step record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogStep {
    pub time: f64,
    /// True plant state at the control instant.
    pub state: State,
    /// Applied rotor command (after INDI when enabled) [N].
    pub command: Vector4<f64>,
    pub reference_position: Vector3<f64>,
    pub kkt: f64,
    /// Wall-clock solver latency [ms].
    pub solve_ms: f64,
    pub solver_status: SolveStatus,
    pub fault_active: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub steps: Vec<LogStep>,
    pub control_period: f64,
}

struct Plant {
    params: QuadParams,
    external_torque: Vector3<f64>,
    failed_rotor: Option<usize>,
}

impl Plant {
    fn step(&self, state: &State, command: &Vector4<f64>, dt: f64) -> State {
        let mut u = *command;
        if let Some(i) = self.failed_rotor {
            u[i] = 0.0;
        }
        let x = rk4_step_map(
            |x| {
                let mut dx = crate::quadmodel::derivative_raw(x, &u, &self.params);
                for k in 0..3 {
                    dx[RATE + k] += self.external_torque[k] / self.params.inertia_diag[k];
                }
                dx
            },
            &state.to_vector(),
            dt,
        );
        let mut x = x;
        let q = crate::quadmodel::quat::canonicalize(&x.fixed_rows::<4>(ATT).into_owned());
        x.fixed_rows_mut::<4>(ATT).copy_from(&q);
        State::from_vector(&x)
    }
}

enum ActiveReference {
    Hover(Vector3<f64>),
    Lemniscate,
    Circle,
    Forward,
}

fn reference_at(
    source: &ActiveReference,
    scenario: &ScenarioConfig,
    params: &QuadParams,
    t: f64,
) -> ReferencePoint {
    match source {
        ActiveReference::Hover(p) => ReferencePoint::hover(params, *p),
        ActiveReference::Lemniscate => {
            if t < scenario.lemniscate_start {
                let start =
                    lemniscate_reference(0.0, scenario.lemniscate_omega, scenario.altitude, params);
                ReferencePoint::hover(params, start.position)
            } else {
                lemniscate_reference(
                    t - scenario.lemniscate_start,
                    scenario.lemniscate_omega,
                    scenario.altitude,
                    params,
                )
            }
        }
        ActiveReference::Circle => circle_reference(
            t,
            scenario.circle_radius,
            scenario.circle_speed,
            scenario.altitude,
            params,
        ),
        ActiveReference::Forward => {
            forward_reference(t, scenario.forward_speed, scenario.altitude, params)
        }
    }
}

fn initial_state(
    scenario: &ScenarioConfig,
    params: &QuadParams,
    rng: &mut ChaCha8Rng,
) -> State {
    let mut state = State::hover(params, Vector3::new(0.0, 0.0, scenario.altitude));
    match scenario.kind {
        ScenarioKind::HoverFail | ScenarioKind::Lemniscate => {}
        ScenarioKind::RandomAttitude => {
            // Seed zero is reserved as the already-level baseline draw.
            if scenario.seed != 0 {
                state.attitude = random_unit_quaternion(rng);
            }
        }
        ScenarioKind::InvertedRecovery => {
            state.attitude =
                UnitQuaternion::from_axis_angle(&Vector3::x_axis(), std::f64::consts::PI);
            state.body_rate = Vector3::new(scenario.flip_rate, 0.0, 0.0);
        }
        ScenarioKind::CircleFail => {
            state.position = Vector3::new(scenario.circle_radius, 0.0, scenario.altitude);
            state.velocity = Vector3::new(0.0, scenario.circle_speed, 0.0);
        }
        ScenarioKind::ForwardFlightFail => {
            state.velocity = Vector3::new(scenario.forward_speed, 0.0, 0.0);
        }
    }
    if let Some(p) = scenario.initial_position {
        state.position = p;
    }
    if let Some(q) = scenario.initial_attitude {
        state.attitude = q;
    }
    state
}

/// Run one closed-loop scenario and evaluate its metrics.
pub fn run_scenario(
    scenario: &ScenarioConfig,
    setup: &SimSetup,
) -> Result<(TrajectoryLog, Metrics), Error> {
    scenario.validate()?;
    setup.quad.validate()?;
    if setup.quad.effectiveness_matrix().try_inverse().is_none() {
        return Err(Error::SingularEffectiveness);
    }

    let ctrl_dt = scenario.control_period();
    let sim_dt = scenario.sim_period();
    let sub_steps = scenario.steps_per_control();
    let n_steps = (scenario.duration * scenario.controller_rate_hz as f64).round() as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let mut state = initial_state(scenario, &setup.quad, &mut rng);
    let noise = (scenario.mismatch.thrust_noise_std > 0.0)
        .then(|| Normal::new(0.0, scenario.mismatch.thrust_noise_std).unwrap());

    let mut plant = Plant {
        params: scenario.mismatch.perturb(&setup.quad),
        external_torque: scenario.mismatch.external_torque,
        failed_rotor: None,
    };

    let mut source = match scenario.kind {
        ScenarioKind::HoverFail | ScenarioKind::RandomAttitude | ScenarioKind::InvertedRecovery => {
            ActiveReference::Hover(state.position)
        }
        ScenarioKind::Lemniscate => ActiveReference::Lemniscate,
        ScenarioKind::CircleFail => ActiveReference::Circle,
        ScenarioKind::ForwardFlightFail => ActiveReference::Forward,
    };

    let problem = OcpProblem::new(setup.quad, setup.weights, setup.ocp)?;
    let mut controller = RtiController::new(problem, &state);
    let mut filter = IndiFilter::new(setup.indi.cutoff_hz);

    let mut fault_applied = false;
    let mut steps = Vec::with_capacity(n_steps);

    for k in 0..n_steps {
        let t = k as f64 * ctrl_dt;

        if !fault_applied
            && scenario.fault.is_active()
            && t >= scenario.fault.fault_time - 0.5 * ctrl_dt
        {
            plant.failed_rotor = scenario.fault.failed_rotor;
            controller.apply_fault(&scenario.fault)?;
            if scenario.kind != ScenarioKind::Lemniscate {
                // Stationary recovery point: planar failure location at the
                // pre-failure reference altitude.
                let ref_now = reference_at(&source, scenario, &setup.quad, t);
                source = ActiveReference::Hover(Vector3::new(
                    state.position[0],
                    state.position[1],
                    ref_now.position[2],
                ));
            }
            fault_applied = true;
        }

        let refs = {
            let problem = controller.problem();
            match &source {
                ActiveReference::Hover(p) => {
                    build_reference(&ReferenceSource::Hover(*p), t, problem)
                }
                moving => {
                    let sample = |tt: f64| reference_at(moving, scenario, &setup.quad, tt);
                    build_reference(&ReferenceSource::Trajectory(&sample), t, problem)
                }
            }
        };
        let reference_position = refs[0].position;
        controller.set_references(refs);

        let mut measured = state;
        if let Some(n) = &noise {
            for i in 0..4 {
                measured.rotor_thrust[i] += n.sample(&mut rng);
            }
        }

        let solution = controller.solve(&measured);
        let mut command = solution.inputs[0];

        if setup.indi.enabled {
            let tau_est = estimate_torque(&measured.rotor_thrust, &setup.quad);
            filter.update(&measured.body_rate, &tau_est, ctrl_dt);
            let fault_now =
                if fault_applied { scenario.fault } else { FaultStatus::none() };
            command =
                indi_allocate(&command, &measured.body_rate, &filter, &setup.quad, &fault_now)?;
        }

        steps.push(LogStep {
            time: t,
            state,
            command,
            reference_position,
            kkt: solution.kkt_residual,
            solve_ms: solution.solve_time * 1e3,
            solver_status: solution.status,
            fault_active: fault_applied,
        });

        for _ in 0..sub_steps {
            state = plant.step(&state, &command, sim_dt);
        }
    }

    let log = TrajectoryLog { steps, control_period: ctrl_dt };
    let metrics = compute_metrics(&log, scenario)?;
    Ok((log, metrics))
}
