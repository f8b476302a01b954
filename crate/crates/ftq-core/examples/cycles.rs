use ftq_core::nmpc::{
    update_fault_mode, CostWeights, OcpProblem, OcpSettings, ReferencePoint, RtiController,
};
use ftq_core::quadmodel::{integrate_rk4, FaultStatus, QuadParams, State};
use nalgebra::{Vector3, Vector4};

fn envf(key: &str, default: f64) -> f64 {
    std::env::var(key).ok().and_then(|v| v.parse().ok()).unwrap_or(default)
}

fn main() {
    let params = QuadParams::default();
    let mut weights = CostWeights::default();
    weights.fault_rate_z = envf("QRZ", weights.fault_rate_z);
    weights.input = Vector4::repeat(envf("QU", weights.input[0]));
    let settings = OcpSettings {
        qp_max_iter: envf("QP_ITER", 300.0) as usize,
        shooting_substeps: envf("SUBSTEPS", 2.0) as usize,
        ..OcpSettings::default()
    };
    let mut problem = OcpProblem::new(params, weights, settings).unwrap();
    let hover_point = Vector3::new(0.0, 0.0, 2.0);
    problem = update_fault_mode(&problem, &FaultStatus::rotor(0, 0.0)).unwrap();
    problem.references =
        vec![ReferencePoint::hover_faulted(&params, hover_point, 0); problem.nodes() + 1];

    let mut state = State::hover(&params, hover_point);
    let mut controller = RtiController::new(problem, &state);

    let ctrl_dt = 1.0 / 150.0;
    let fine = 7;
    for cycle in 0..envf("CYCLES", 40.0) as usize {
        let sol = controller.solve(&state);
        let mut u = sol.inputs[0];
        u[0] = 0.0;
        // Plan preview: tilt at nodes 1..4 plus the horizon peak.
        let plan_tilt: Vec<f64> =
            sol.states.iter().map(|s| s.tilt_angle().to_degrees()).collect();
        let peak = plan_tilt.iter().cloned().fold(0.0, f64::max);
        println!(
            "c={cycle:3} t={:5.3} tilt={:6.2} w=({:6.2},{:6.2},{:6.2}) u=({:4.2},{:4.2},{:4.2},{:4.2}) plan_t1..4=({:5.1},{:5.1},{:5.1},{:5.1}) peak={:5.1} kkt={:.1e}",
            cycle as f64 * ctrl_dt,
            state.tilt_angle().to_degrees(),
            state.body_rate[0],
            state.body_rate[1],
            state.body_rate[2],
            u[0], u[1], u[2], u[3],
            plan_tilt[1], plan_tilt[2], plan_tilt[3], plan_tilt[4],
            peak,
            sol.kkt_residual,
        );
        for _ in 0..fine {
            state = integrate_rk4(&state, &u, &params, ctrl_dt / fine as f64).unwrap();
        }
    }
}
