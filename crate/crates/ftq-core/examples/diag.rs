use ftq_core::simkit::{run_scenario, ScenarioConfig, ScenarioKind, SimSetup};

fn envf(key: &str, default: f64) -> f64 {
    std::env::var(key).ok().and_then(|v| v.parse().ok()).unwrap_or(default)
}

fn main() {
    let kind: ScenarioKind = std::env::var("KIND")
        .unwrap_or_else(|_| "hover_fail".into())
        .parse()
        .unwrap();
    let mut scenario = ScenarioConfig::preset(kind);
    scenario.seed = envf("SEED", scenario.seed as f64) as u64;
    scenario.duration = envf("DURATION", scenario.duration);
    let mut setup = SimSetup::default();
    setup.ocp.qp_max_iter = envf("QP_ITER", setup.ocp.qp_max_iter as f64) as usize;
    setup.ocp.shooting_substeps = envf("SUBSTEPS", setup.ocp.shooting_substeps as f64) as usize;
    setup.ocp.step_damping = envf("DAMP", setup.ocp.step_damping);
    let w = &mut setup.weights;
    w.rate[0] = envf("QW_XY", w.rate[0]);
    w.rate[1] = w.rate[0];
    w.tilt = envf("QTILT", w.tilt);
    let qpos = envf("QPOS", w.pos[0]);
    w.pos = nalgebra::Vector3::repeat(qpos);
    w.terminal_pos = nalgebra::Vector3::repeat(2.0 * qpos);
    let qvel = envf("QVEL", w.vel[0]);
    w.vel = nalgebra::Vector3::repeat(qvel);
    w.vel[2] = envf("QVELZ", qvel);
    w.terminal_vel = 2.0 * w.vel;
    w.pos[2] = envf("QPOSZ", w.pos[2]);
    w.terminal_pos[2] = 2.0 * w.pos[2];
    w.fault_rate_z = envf("QRZ", w.fault_rate_z);
    let qu = envf("QU", w.input[0]);
    w.input = nalgebra::Vector4::repeat(qu);
    let qt = envf("QT", w.thrust[0]);
    w.thrust = nalgebra::Vector4::repeat(qt);
    w.terminal_rate[0] = 2.0 * w.rate[0];
    w.terminal_rate[1] = 2.0 * w.rate[1];
    w.terminal_tilt = 2.0 * w.tilt;
    w.terminal_thrust = nalgebra::Vector4::repeat(2.0 * qt);
    setup.indi.enabled = envf("INDI", 1.0) > 0.5;

    let (log, metrics) = run_scenario(&scenario, &setup).unwrap();
    println!("metrics: {metrics:?}");
    let stride = envf("STRIDE", 30.0) as usize;
    let from = envf("FROM", 0.0);
    let to = envf("TO", f64::INFINITY);
    for step in log.steps.iter().step_by(stride) {
        if step.time < from || step.time > to {
            continue;
        }
        let tilt = step.state.tilt_angle().to_degrees();
        let xy = ((step.state.position[0] - step.reference_position[0]).powi(2)
            + (step.state.position[1] - step.reference_position[1]).powi(2))
        .sqrt();
        println!(
            "t={:6.3} tilt={:7.2} xy={:6.3} z={:7.3} w=({:6.2},{:6.2},{:6.2}) u={:?}",
            step.time,
            tilt,
            xy,
            step.state.position[2],
            step.state.body_rate[0],
            step.state.body_rate[1],
            step.state.body_rate[2],
            step.command.iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>()
        );
    }
}
