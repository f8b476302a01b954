//! Reference points and horizon reference construction.

use nalgebra::{UnitQuaternion, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::quadmodel::QuadParams;

use super::solver::OcpProblem;

/// Tracking reference for a single node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferencePoint {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub attitude: UnitQuaternion<f64>,
    pub body_rate: Vector3<f64>,
    pub rotor_thrust: Vector4<f64>,
    pub input: Vector4<f64>,
}

impl ReferencePoint {
    /// Level hover at a fixed point.
    pub fn hover(params: &QuadParams, position: Vector3<f64>) -> Self {
        let t = params.hover_thrusts();
        Self {
            position,
            velocity: Vector3::zeros(),
            attitude: UnitQuaternion::identity(),
            body_rate: Vector3::zeros(),
            rotor_thrust: t,
            input: t,
        }
    }

    /// Hover anchor with the failed rotor at zero and the weight shared by
    /// the healthy three.
    pub fn hover_faulted(params: &QuadParams, position: Vector3<f64>, failed_rotor: usize) -> Self {
        let t = params.hover_thrusts_faulted(failed_rotor);
        Self { rotor_thrust: t, input: t, ..Self::hover(params, position) }
    }
}

/// Where horizon references come from: a fixed hover point or a sampled
/// trajectory parametrized by absolute time.
pub enum ReferenceSource<'a> {
    Hover(Vector3<f64>),
    Trajectory(&'a dyn Fn(f64) -> ReferencePoint),
}

/// Sample the N+1 node references over `[t_now, t_now + horizon]`.
///
/// When the problem is in fault mode the thrust anchors of every node are
/// replaced by the three-rotor hover split.
pub fn build_reference(
    source: &ReferenceSource<'_>,
    t_now: f64,
    problem: &OcpProblem,
) -> Vec<ReferencePoint> {
    let n = problem.nodes();
    let dt = problem.node_dt();
    let mut refs: Vec<ReferencePoint> = (0..=n)
        .map(|k| match source {
            ReferenceSource::Hover(p) => ReferencePoint::hover(&problem.params, *p),
            ReferenceSource::Trajectory(f) => f(t_now + k as f64 * dt),
        })
        .collect();
    if let Some(i) = problem.fault.failed_rotor {
        let t = problem.params.hover_thrusts_faulted(i);
        for r in &mut refs {
            r.rotor_thrust = t;
            r.input = t;
        }
    }
    refs
}
