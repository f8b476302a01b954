use ftq_core::nmpc::{
    solve_rti, update_fault_mode, CostWeights, OcpProblem, OcpSettings, OcpSolution,
    ReferencePoint,
};
use ftq_core::quadmodel::{FaultStatus, QuadParams, State};
use nalgebra::Vector3;

fn envf(key: &str, default: f64) -> f64 {
    std::env::var(key).ok().and_then(|v| v.parse().ok()).unwrap_or(default)
}

fn dump(tag: &str, sol: &OcpSolution) {
    println!("--- {tag}: kkt={:.2e} iters={} status={:?}", sol.kkt_residual, sol.qp_iterations, sol.status);
    for (k, s) in sol.states.iter().enumerate() {
        let u = if k < sol.inputs.len() { sol.inputs[k] } else { nalgebra::Vector4::zeros() };
        println!(
            "  k={k:2} tilt={:6.1} p=({:5.2},{:5.2},{:5.2}) w=({:6.2},{:6.2},{:6.2}) t=({:.2},{:.2},{:.2},{:.2}) u=({:.2},{:.2},{:.2},{:.2})",
            s.tilt_angle().to_degrees(),
            s.position[0], s.position[1], s.position[2],
            s.body_rate[0], s.body_rate[1], s.body_rate[2],
            s.rotor_thrust[0], s.rotor_thrust[1], s.rotor_thrust[2], s.rotor_thrust[3],
            u[0], u[1], u[2], u[3],
        );
    }
}

fn main() {
    let params = QuadParams::default();
    let mut weights = CostWeights::default();
    weights.fault_rate_z = envf("QRZ", weights.fault_rate_z);
    weights.input = nalgebra::Vector4::repeat(envf("QU", weights.input[0]));
    let settings = OcpSettings {
        qp_max_iter: envf("QP_ITER", 300.0) as usize,
        shooting_substeps: envf("SUBSTEPS", 4.0) as usize,
        ..OcpSettings::default()
    };
    let mut problem = OcpProblem::new(params, weights, settings).unwrap();
    let hover_point = Vector3::new(0.0, 0.0, 2.0);
    let fault = FaultStatus::rotor(0, 0.0);
    problem = update_fault_mode(&problem, &fault).unwrap();
    problem.references =
        vec![ReferencePoint::hover_faulted(&params, hover_point, 0); problem.nodes() + 1];

    // Plant state at the fault instant: level hover, all four thrust states
    // still at the hover value.
    let x0 = State::hover(&params, hover_point);

    let mut sol = OcpSolution::cold_start(&problem, &x0);
    for it in 0..envf("ITERS", 12.0) as usize {
        sol = solve_rti(&problem, &x0, &sol);
        if it < 2 || it + 1 == envf("ITERS", 12.0) as usize {
            dump(&format!("sqp iter {it}"), &sol);
        }
    }
}
