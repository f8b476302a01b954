use ftq_core::simkit::{monte_carlo_recovery, ScenarioConfig, ScenarioKind, SimSetup};

fn envf(key: &str, default: f64) -> f64 {
    std::env::var(key).ok().and_then(|v| v.parse().ok()).unwrap_or(default)
}

fn main() {
    let mut template = ScenarioConfig::preset(ScenarioKind::RandomAttitude);
    template.duration = envf("DURATION", 4.0);
    let mut setup = SimSetup::default();
    setup.ocp.qp_max_iter = envf("QP_ITER", setup.ocp.qp_max_iter as f64) as usize;
    setup.ocp.shooting_substeps = envf("SUBSTEPS", setup.ocp.shooting_substeps as f64) as usize;
    setup.ocp.step_damping = envf("DAMP", setup.ocp.step_damping);
    let w = &mut setup.weights;
    w.rate[0] = envf("QW_XY", w.rate[0]);
    w.rate[1] = w.rate[0];
    w.tilt = envf("QTILT", w.tilt);
    w.fault_rate_z = envf("QRZ", w.fault_rate_z);
    let qpos = envf("QPOS", w.pos[0]);
    w.pos = nalgebra::Vector3::repeat(qpos);
    w.terminal_pos = nalgebra::Vector3::repeat(2.0 * qpos);
    let qvel = envf("QVEL", w.vel[0]);
    w.vel = nalgebra::Vector3::repeat(qvel);
    w.vel[2] = envf("QVELZ", qvel);
    w.terminal_vel = 2.0 * w.vel;
    w.pos[2] = envf("QPOSZ", w.pos[2]);
    w.terminal_pos[2] = 2.0 * w.pos[2];
    w.terminal_rate[0] = 2.0 * w.rate[0];
    w.terminal_rate[1] = 2.0 * w.rate[1];
    w.terminal_tilt = 2.0 * w.tilt;

    let n = envf("RUNS", 20.0) as usize;
    let base_seed = envf("BASE_SEED", 1.0) as u64;
    let t0 = std::time::Instant::now();
    let (summary, records) = monte_carlo_recovery(n, base_seed, &template, &setup, None).unwrap();
    println!(
        "runs={} successes={} rate={:.2} wall={:.1}s",
        summary.runs,
        summary.successes,
        summary.success_rate,
        t0.elapsed().as_secs_f64()
    );
    let mut rec: Vec<f64> = records
        .iter()
        .filter_map(|(r, _)| r.metrics.recovery_time)
        .collect();
    rec.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let within = |t: f64| rec.iter().filter(|v| **v <= t).count();
    println!(
        "recovery: within1s={}/{} within2.5s={}/{} median={:.2} max={:.2}",
        within(1.0),
        n,
        within(2.5),
        n,
        rec.get(rec.len() / 2).unwrap_or(&f64::NAN),
        rec.last().unwrap_or(&f64::NAN)
    );
    println!(
        "xy: <0.8 {:.2} max={:.3} | drop: <1.0 {:.2} max={:.3}",
        summary.xy_offset_hist.fraction_below(0.8),
        summary.xy_offset.max,
        summary.alt_drop_hist.fraction_below(1.0),
        summary.alt_drop.max
    );
    let mut worst: Vec<_> = records.iter().map(|(r, _)| r).collect();
    worst.sort_by(|a, b| {
        let ka = a.metrics.recovery_time.unwrap_or(f64::INFINITY);
        let kb = b.metrics.recovery_time.unwrap_or(f64::INFINITY);
        kb.partial_cmp(&ka).unwrap()
    });
    for r in worst.iter().take(5) {
        println!(
            "  worst seed={} rec={:?} drop={:.2} xy={:.2}",
            r.seed, r.metrics.recovery_time, r.metrics.max_alt_drop, r.metrics.max_xy_offset
        );
    }
}
