//! Quantitative outcomes of a closed-loop run.

use serde::{Deserialize, Serialize};

use crate::Error;

use super::runner::TrajectoryLog;
use super::scenario::{ScenarioConfig, ScenarioKind};

/// Per-run outcome measures. Displacements are relative to the active
/// reference at each logged step; recovery is judged against the thresholds
/// in the scenario config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Largest altitude loss after the fault epoch [m].
    pub max_alt_drop: f64,
    /// Largest planar distance from the reference after the fault epoch [m].
    pub max_xy_offset: f64,
    /// Time from the fault epoch to the start of the first window satisfying
    /// the recovery thresholds for the full hold duration [s].
    pub recovery_time: Option<f64>,
    pub success: bool,
    /// Planar RMS tracking error of trajectory scenarios [m].
    pub rms_tracking_error: Option<f64>,
    /// Mean wall-clock solver latency [s]. Not covered by determinism.
    pub mean_solver_latency: f64,
}

impl Metrics {
    /// Copy with wall-clock fields cleared, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        Self { mean_solver_latency: 0.0, ..*self }
    }
}

/// Evaluate the run log against the scenario's thresholds.
pub fn compute_metrics(log: &TrajectoryLog, config: &ScenarioConfig) -> Result<Metrics, Error> {
    if log.steps.is_empty() {
        return Err(Error::InvalidArgument("trajectory log is empty".into()));
    }
    let epoch_idx = if config.fault.is_active() {
        log.steps
            .iter()
            .position(|s| s.fault_active)
            .ok_or(Error::LogMissingFaultEpoch)?
    } else {
        0
    };
    let epoch = &log.steps[epoch_idx];
    let epoch_time = epoch.time;
    let z0 = epoch.state.position[2];

    let mut max_alt_drop = 0.0f64;
    let mut max_xy_offset = 0.0f64;
    for step in &log.steps[epoch_idx..] {
        max_alt_drop = max_alt_drop.max(z0 - step.state.position[2]);
        let dx = step.state.position[0] - step.reference_position[0];
        let dy = step.state.position[1] - step.reference_position[1];
        max_xy_offset = max_xy_offset.max((dx * dx + dy * dy).sqrt());
    }

    // First window satisfying both thresholds continuously for the hold
    // duration; the window must complete inside the log.
    let thr = &config.recovery;
    let mut recovery_time = None;
    let mut streak_start: Option<f64> = None;
    for step in &log.steps[epoch_idx..] {
        let dx = step.state.position[0] - step.reference_position[0];
        let dy = step.state.position[1] - step.reference_position[1];
        let ok = step.state.tilt_angle() < thr.tilt && (dx * dx + dy * dy).sqrt() < thr.xy_error;
        if ok {
            let start = *streak_start.get_or_insert(step.time);
            if step.time - start >= thr.hold {
                recovery_time = Some(start - epoch_time);
                break;
            }
        } else {
            streak_start = None;
        }
    }

    let rms_tracking_error = if config.kind == ScenarioKind::Lemniscate {
        let from = epoch_time.max(config.lemniscate_start);
        let mut sum = 0.0;
        let mut count = 0usize;
        for step in &log.steps {
            if step.time >= from {
                let dx = step.state.position[0] - step.reference_position[0];
                let dy = step.state.position[1] - step.reference_position[1];
                sum += dx * dx + dy * dy;
                count += 1;
            }
        }
        (count > 0).then(|| (sum / count as f64).sqrt())
    } else {
        None
    };

    let mean_solver_latency = log.steps.iter().map(|s| s.solve_ms).sum::<f64>()
        / log.steps.len() as f64
        / 1000.0;

    Ok(Metrics {
        max_alt_drop,
        max_xy_offset,
        recovery_time,
        success: recovery_time.is_some(),
        rms_tracking_error,
        mean_solver_latency,
    })
}
