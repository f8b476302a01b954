//! Real-time iteration solver for the fault-tolerant tracking OCP.
//!
//! Each control cycle performs exactly one Gauss-Newton SQP iteration:
//! shift the previous input trajectory, forward-simulate the shooting nodes
//! from the new measurement, linearize dynamics and residuals along the
//! trajectory, condense the state deviations into a dense box-constrained QP
//! over the stacked input corrections, solve it with an active-set method
//! warm-started from the previous cycle, and expand the corrected inputs back
//! into a state trajectory.

use std::time::Instant;

use nalgebra::{DMatrix, DVector, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::quadmodel::{apply_fault_bounds, FaultStatus, QuadParams, State, StateVector};
use crate::Error;

use super::linearize::shooting_sensitivity;
use super::qp::{qp_solve, QpStatus, VarBound};
use super::reference::ReferencePoint;
use super::residual::{stage_weighted, terminal_weighted, STAGE_RESIDUAL_DIM};
use super::weights::CostWeights;

/// Horizon discretization and solver limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OcpSettings {
    /// Prediction horizon [s].
    pub horizon: f64,
    /// Number of shooting intervals.
    pub nodes: usize,
    /// RK4 steps per shooting interval.
    pub shooting_substeps: usize,
    /// Euclidean clamp on the initial position error [m].
    pub position_error_limit: f64,
    /// Active-set iteration cap per control cycle.
    pub qp_max_iter: usize,
    /// Proximal damping on the per-cycle input corrections, relative to the
    /// mean diagonal of the condensed Hessian (dimensionless).
    ///
    /// Keeps each real-time iteration inside the trust region of its
    /// linearization; without it consecutive cycles jump between
    /// near-degenerate bang-bang plans on the post-failure spin. Scaling
    /// with the Hessian keeps the step invariant under uniform weight
    /// scaling.
    pub step_damping: f64,
}

impl Default for OcpSettings {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            nodes: 20,
            shooting_substeps: 2,
            position_error_limit: 2.0,
            qp_max_iter: 200,
            step_damping: 0.03,
        }
    }
}

/// The parametric optimal control problem solved each cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct OcpProblem {
    pub params: QuadParams,
    pub settings: OcpSettings,
    pub weights: CostWeights,
    /// N+1 node references.
    pub references: Vec<ReferencePoint>,
    pub input_lower: Vector4<f64>,
    pub input_upper: Vector4<f64>,
    pub fault: FaultStatus,
    nominal_weights: CostWeights,
    nominal_lower: Vector4<f64>,
    nominal_upper: Vector4<f64>,
}

impl OcpProblem {
    pub fn new(
        params: QuadParams,
        weights: CostWeights,
        settings: OcpSettings,
    ) -> Result<Self, Error> {
        params.validate()?;
        weights.validate()?;
        if settings.nodes < 2 {
            return Err(Error::InvalidParams("at least 2 horizon nodes required".into()));
        }
        if !(settings.horizon > 0.0) {
            return Err(Error::InvalidParams("horizon must be positive".into()));
        }
        if !(settings.position_error_limit > 0.0) {
            return Err(Error::InvalidParams("position error limit must be positive".into()));
        }
        if settings.qp_max_iter == 0 {
            return Err(Error::InvalidParams("qp_max_iter must be positive".into()));
        }
        if settings.shooting_substeps == 0 {
            return Err(Error::InvalidParams("shooting_substeps must be positive".into()));
        }
        let references =
            vec![ReferencePoint::hover(&params, Vector3::zeros()); settings.nodes + 1];
        Ok(Self {
            params,
            settings,
            weights,
            references,
            input_lower: params.thrust_lower(),
            input_upper: params.thrust_upper(),
            fault: FaultStatus::none(),
            nominal_weights: weights,
            nominal_lower: params.thrust_lower(),
            nominal_upper: params.thrust_upper(),
        })
    }

    pub fn nodes(&self) -> usize {
        self.settings.nodes
    }

    /// Shooting interval length [s].
    pub fn node_dt(&self) -> f64 {
        self.settings.horizon / self.settings.nodes as f64
    }
}

/// Online parameter update for a rotor failure (or recovery to nominal).
///
/// A failed rotor pins its input bounds to zero and relaxes the yaw and
/// yaw-rate weights; clearing the fault restores the nominal weights and
/// bounds exactly as constructed. Nothing else changes: this is the same
/// controller with new parameters, not a new controller.
pub fn update_fault_mode(problem: &OcpProblem, fault: &FaultStatus) -> Result<OcpProblem, Error> {
    fault.validate()?;
    let mut p = problem.clone();
    p.fault = *fault;
    match fault.failed_rotor {
        Some(_) => {
            let (lo, hi) = apply_fault_bounds(&p.nominal_lower, &p.nominal_upper, fault);
            p.input_lower = lo;
            p.input_upper = hi;
            p.weights = p.nominal_weights.with_fault_relaxation();
        }
        None => {
            p.input_lower = p.nominal_lower;
            p.input_upper = p.nominal_upper;
            p.weights = p.nominal_weights;
        }
    }
    Ok(p)
}

/// Euclidean-norm clamp of a position error; direction preserved.
pub fn clamp_position_error(error: &Vector3<f64>, limit: f64) -> Vector3<f64> {
    let norm = error.norm();
    if norm > limit {
        error * (limit / norm)
    } else {
        *error
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Converged,
    MaxIter,
    InfeasibleGuard,
}

/// Result of one real-time iteration.
#[derive(Debug, Clone)]
pub struct OcpSolution {
    /// Predicted states, `states[0]` is the measured initial state.
    pub states: Vec<State>,
    /// Optimized rotor commands per shooting interval.
    pub inputs: Vec<Vector4<f64>>,
    pub kkt_residual: f64,
    pub qp_iterations: usize,
    /// Wall-clock solve time [s].
    pub solve_time: f64,
    pub status: SolveStatus,
    pub(crate) active_set: Vec<VarBound>,
}

impl OcpSolution {
    /// Cold-start guess: the initial state replicated along the horizon with
    /// hover inputs (fault-aware split when a rotor is out).
    pub fn cold_start(problem: &OcpProblem, x0: &State) -> Self {
        let input = match problem.fault.failed_rotor {
            Some(i) => problem.params.hover_thrusts_faulted(i),
            None => problem.params.hover_thrusts(),
        };
        Self {
            states: vec![*x0; problem.nodes() + 1],
            inputs: vec![input; problem.nodes()],
            kkt_residual: f64::INFINITY,
            qp_iterations: 0,
            solve_time: 0.0,
            status: SolveStatus::Converged,
            active_set: Vec::new(),
        }
    }
}

fn guard_return(previous: &OcpSolution, started: Instant) -> OcpSolution {
    let mut out = previous.clone();
    out.status = SolveStatus::InfeasibleGuard;
    out.solve_time = started.elapsed().as_secs_f64();
    out
}

/// Weighted tracking cost of the rollout from `x0` under the given inputs.
/// Returns the node states alongside; `None` if the rollout leaves the
/// representable range.
fn rollout_cost(
    problem: &OcpProblem,
    references: &[ReferencePoint],
    x0: &StateVector,
    inputs: &[Vector4<f64>],
) -> Option<(Vec<StateVector>, f64)> {
    let n = problem.nodes();
    let substeps = problem.settings.shooting_substeps;
    let sub_dt = problem.node_dt() / substeps as f64;
    let mut states = Vec::with_capacity(n + 1);
    let mut x = *x0;
    let mut cost = 0.0;
    states.push(x);
    for k in 0..n {
        let (y, _, _) = stage_weighted(&x, &inputs[k], &references[k], &problem.weights);
        cost += y.norm_squared();
        for _ in 0..substeps {
            x = crate::quadmodel::rk4_step_raw(&x, &inputs[k], &problem.params, sub_dt);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return None;
        }
        states.push(x);
    }
    let (y_n, _) = terminal_weighted(&x, &references[n], &problem.weights);
    cost += y_n.norm_squared();
    cost.is_finite().then_some((states, cost))
}

/// One real-time iteration from measured state `x0`, warm-started on the
/// previous solution. Returns the corrected trajectory; the first input is
/// the one to actuate.
///
/// The step is a condensed Gauss-Newton iteration along the shooting rollout
/// of the warm-start inputs, followed by a backtracking line search on the
/// true rollout cost. The nonlinear acceptance test is what keeps the cycle
/// robust on the post-failure spin, where the horizon sensitivities are far
/// beyond the linearization radius.
pub fn solve_rti(problem: &OcpProblem, x0: &State, previous: &OcpSolution) -> OcpSolution {
    let started = Instant::now();
    let n = problem.nodes();
    let dt = problem.node_dt();
    let nu = 4 * n;
    debug_assert_eq!(problem.references.len(), n + 1);

    // Clamp the initial position error by rigidly shifting the reference
    // toward the vehicle; the trajectory shape over the horizon is kept.
    let err0 = x0.position - problem.references[0].position;
    let shift = err0 - clamp_position_error(&err0, problem.settings.position_error_limit);
    let mut references = problem.references.clone();
    if shift.norm_squared() > 0.0 {
        for r in &mut references {
            r.position += shift;
        }
    }

    // Warm-start inputs, projected into the current bounds so the
    // linearization point is feasible (matters on the cycle a fault lands).
    // The plan is NOT shifted between cycles: the control period is a
    // fraction of a node interval, so the previous plan is only slightly
    // stale; shifting one node per solve would advance it several times
    // faster than real time.
    let last_prev = previous.inputs.len().saturating_sub(1);
    let mut u_bar: Vec<Vector4<f64>> = Vec::with_capacity(n);
    for k in 0..n {
        let src = previous
            .inputs
            .get(k.min(last_prev))
            .copied()
            .unwrap_or_else(|| problem.params.hover_thrusts());
        let clamped = Vector4::from_fn(|i, _| {
            src[i].clamp(problem.input_lower[i], problem.input_upper[i])
        });
        u_bar.push(clamped);
    }

    let x0_raw = x0.to_vector();
    let Some((x_bar, base_cost)) = rollout_cost(problem, &references, &x0_raw, &u_bar) else {
        return guard_return(previous, started);
    };

    // Condensed Gauss-Newton assembly over the stacked input corrections,
    // sweeping the node sensitivities forward along the rollout.
    let substeps = problem.settings.shooting_substeps;
    let mut h = DMatrix::<f64>::zeros(nu, nu);
    let mut g = DVector::<f64>::zeros(nu);
    // Sensitivity of the node-k state w.r.t. all input corrections.
    let mut e = DMatrix::<f64>::zeros(17, nu);

    for k in 0..n {
        let (y, jx, sqrt_wu) = stage_weighted(&x_bar[k], &u_bar[k], &references[k], &problem.weights);
        let mut m = DMatrix::<f64>::zeros(STAGE_RESIDUAL_DIM, nu);
        for r in 0..STAGE_RESIDUAL_DIM {
            for col in 0..4 * k {
                let mut acc = 0.0;
                for t in 0..17 {
                    acc += jx[(r, t)] * e[(t, col)];
                }
                m[(r, col)] = acc;
            }
        }
        for i in 0..4 {
            m[(16 + i, 4 * k + i)] += sqrt_wu[i];
        }
        let y_d = DVector::from_iterator(STAGE_RESIDUAL_DIM, y.iter().copied());
        h.gemm_tr(1.0, &m, &m, 1.0);
        g.gemv_tr(1.0, &m, &y_d, 1.0);

        let (_, ad, bd) =
            shooting_sensitivity(&x_bar[k], &u_bar[k], &problem.params, dt, substeps);

        // E <- Ad * E; E[:, block k] += Bd. Blocks beyond k stay zero.
        let mut e_next = DMatrix::<f64>::zeros(17, nu);
        for r in 0..17 {
            for col in 0..4 * k {
                let mut acc = 0.0;
                for t in 0..17 {
                    acc += ad[(r, t)] * e[(t, col)];
                }
                e_next[(r, col)] = acc;
            }
        }
        for r in 0..17 {
            for i in 0..4 {
                e_next[(r, 4 * k + i)] += bd[(r, i)];
            }
        }
        e = e_next;
    }

    let (y_n, jx_n) = terminal_weighted(&x_bar[n], &references[n], &problem.weights);
    let mut m = DMatrix::<f64>::zeros(16, nu);
    for r in 0..16 {
        for col in 0..nu {
            let mut acc = 0.0;
            for t in 0..17 {
                acc += jx_n[(r, t)] * e[(t, col)];
            }
            m[(r, col)] = acc;
        }
    }
    let y_d = DVector::from_iterator(16, y_n.iter().copied());
    h.gemm_tr(1.0, &m, &m, 1.0);
    g.gemv_tr(1.0, &m, &y_d, 1.0);

    if h.iter().any(|v| !v.is_finite()) || g.iter().any(|v| !v.is_finite()) {
        return guard_return(previous, started);
    }
    let damping = problem.settings.step_damping * h.trace() / nu as f64;
    for d in 0..nu {
        h[(d, d)] += damping;
    }

    // Per-node fault-aware box constraints on the corrections.
    let mut lower = DVector::zeros(nu);
    let mut upper = DVector::zeros(nu);
    for k in 0..n {
        for i in 0..4 {
            lower[4 * k + i] = problem.input_lower[i] - u_bar[k][i];
            upper[4 * k + i] = problem.input_upper[i] - u_bar[k][i];
        }
    }

    let warm = (previous.active_set.len() == nu).then_some(previous.active_set.as_slice());
    let qp = qp_solve(&h, &g, &lower, &upper, warm, problem.settings.qp_max_iter);
    if qp.x.iter().any(|v| !v.is_finite()) {
        return guard_return(previous, started);
    }

    // Backtracking acceptance on the true rollout cost; the warm start is
    // the fallback, so the accepted plan never costs more than keeping it.
    let candidate = |alpha: f64| -> Vec<Vector4<f64>> {
        (0..n)
            .map(|k| {
                let mut u = Vector4::from_fn(|i, _| {
                    (u_bar[k][i] + alpha * qp.x[4 * k + i])
                        .clamp(problem.input_lower[i], problem.input_upper[i])
                });
                if let Some(i) = problem.fault.failed_rotor {
                    u[i] = 0.0;
                }
                u
            })
            .collect()
    };
    let mut best: Option<(Vec<Vector4<f64>>, Vec<StateVector>, f64)> = None;
    for alpha in [1.0, 0.5, 0.25, 0.125, 0.0625] {
        let u_try = candidate(alpha);
        if let Some((x_try, cost)) = rollout_cost(problem, &references, &x0_raw, &u_try) {
            if cost < base_cost {
                best = Some((u_try, x_try, cost));
                break;
            }
        }
    }
    let (inputs, trajectory, _) = best.unwrap_or((u_bar, x_bar, base_cost));

    let mut states = Vec::with_capacity(n + 1);
    states.push(*x0);
    states.extend(trajectory.iter().skip(1).map(State::from_vector));

    OcpSolution {
        states,
        inputs,
        kkt_residual: qp.kkt_residual,
        qp_iterations: qp.iterations,
        solve_time: started.elapsed().as_secs_f64(),
        status: match qp.status {
            QpStatus::Converged => SolveStatus::Converged,
            QpStatus::MaxIter => SolveStatus::MaxIter,
        },
        active_set: qp.active_set,
    }
}

/// Stateful controller wrapper owning the problem and the warm start.
#[derive(Debug, Clone)]
pub struct RtiController {
    problem: OcpProblem,
    last: OcpSolution,
}

impl RtiController {
    pub fn new(problem: OcpProblem, x0: &State) -> Self {
        let last = OcpSolution::cold_start(&problem, x0);
        Self { problem, last }
    }

    pub fn problem(&self) -> &OcpProblem {
        &self.problem
    }

    pub fn set_references(&mut self, references: Vec<ReferencePoint>) {
        debug_assert_eq!(references.len(), self.problem.nodes() + 1);
        self.problem.references = references;
    }

    /// Online fault-mode parameter update (also restores nominal mode).
    pub fn apply_fault(&mut self, fault: &FaultStatus) -> Result<(), Error> {
        self.problem = update_fault_mode(&self.problem, fault)?;
        Ok(())
    }

    pub fn solve(&mut self, x0: &State) -> OcpSolution {
        let solution = solve_rti(&self.problem, x0, &self.last);
        self.last = solution.clone();
        solution
    }

    pub fn last(&self) -> &OcpSolution {
        &self.last
    }
}
