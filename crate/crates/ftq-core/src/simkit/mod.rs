//! Deterministic closed-loop simulation harness: scenarios, mismatch
//! injection, metrics and Monte-Carlo campaigns.

mod metrics;
mod montecarlo;
mod runner;
mod scenario;

pub use metrics::{compute_metrics, Metrics};
pub use montecarlo::{
    monte_carlo_recovery, records_without_timing, CampaignSummary, DistributionSummary, Histogram,
    RunRecord,
};
pub use runner::{run_scenario, IndiSettings, LogStep, SimSetup, TrajectoryLog};
pub use scenario::{
    circle_reference, forward_reference, lemniscate_reference, MismatchConfig, RecoveryThresholds,
    ScenarioConfig, ScenarioKind,
};
