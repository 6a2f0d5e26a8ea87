use rand::Rng;
use rand_chacha::ChaCha8Rng;
use revnm::plant::{Plant, PlantConfig, PlantState, SignalPath};

pub fn plant() -> Plant<f64> {
    Plant::new(PlantConfig::excavator()).unwrap()
}

/// Straight-line evaluation of the boom/arm dynamics from the raw
/// parameters: `[q̇1, q̇2, q̈1, q̈2, Ṗ1a, Ṗ2a, Ṗ1b, Ṗ2b]`.
pub fn oracle(c: &PlantConfig<f64>, q: [f64; 2], qd: [f64; 2], p1: [f64; 2], p2: [f64; 2], sigma: [f64; 2]) -> [f64; 8] {
    let pi = std::f64::consts::PI;
    let mut tau = [0.0; 2];
    let mut dp1 = [0.0; 2];
    let mut dp2 = [0.0; 2];
    for j in 0..2 {
        let a = c.actuators[j];
        let g = c.linkages[j];
        let th = q[j] + g.offset;
        let y = (g.base_distance.powi(2) + g.rod_distance.powi(2)
            - 2.0 * g.base_distance * g.rod_distance * th.cos())
        .sqrt();
        let jac = g.base_distance * g.rod_distance * th.sin() / y;
        let x = y - (g.retracted_length + 0.5 * a.stroke);
        let xd = jac * qd[j];
        let a1 = pi * a.piston_diameter * a.piston_diameter / 4.0;
        let a2 = pi * (a.piston_diameter * a.piston_diameter - a.rod_diameter * a.rod_diameter) / 4.0;
        let yv = (a.valve_gain * sigma[j]).clamp(-1.0, 1.0);
        let cp1 = p1[j].clamp(a.tank_pressure, a.supply_pressure);
        let cp2 = p2[j].clamp(a.tank_pressure, a.supply_pressure);
        let (f1, f2) = if yv > 0.0 {
            ((a.supply_pressure - cp1).sqrt(), (cp2 - a.tank_pressure).sqrt())
        } else if yv < 0.0 {
            ((cp1 - a.tank_pressure).sqrt(), (a.supply_pressure - cp2).sqrt())
        } else {
            (0.0, 0.0)
        };
        let qf1 = a.orifice_cap * yv * f1 / a.density.sqrt();
        let qf2 = a.orifice_rod * yv * f2 / a.density.sqrt();
        let v1 = a.dead_volume_cap + a1 * x;
        let v2 = a.dead_volume_rod - a2 * x;
        let leak = a.leakage * (p1[j] - p2[j]);
        dp1[j] = a.bulk_modulus / v1 * (qf1 - a1 * xd - leak);
        dp2[j] = a.bulk_modulus / v2 * (a2 * xd + leak - qf2);
        tau[j] = jac * (p1[j] * a1 - p2[j] * a2 - a.viscous_friction * xd);
    }
    let [l1, l2] = c.links;
    let gr = c.gravity;
    let c2 = q[1].cos();
    let s2 = q[1].sin();
    let m11 = l1.inertia + l2.inertia + l1.mass * l1.com * l1.com
        + l2.mass * (l1.length * l1.length + l2.com * l2.com + 2.0 * l1.length * l2.com * c2);
    let m12 = l2.inertia + l2.mass * (l2.com * l2.com + l1.length * l2.com * c2);
    let m22 = l2.inertia + l2.mass * l2.com * l2.com;
    // Centrifugal and Coriolis torques written out directly.
    let hh = l2.mass * l1.length * l2.com * s2;
    let cor1 = -hh * (2.0 * qd[0] * qd[1] + qd[1] * qd[1]);
    let cor2 = hh * qd[0] * qd[0];
    let g1 = (l1.mass * l1.com + l2.mass * l1.length) * gr * q[0].cos() + l2.mass * l2.com * gr * (q[0] + q[1]).cos();
    let g2 = l2.mass * l2.com * gr * (q[0] + q[1]).cos();
    let r1 = tau[0] - cor1 - g1 - l1.damping * qd[0];
    let r2 = tau[1] - cor2 - g2 - l2.damping * qd[1];
    let det = m11 * m22 - m12 * m12;
    let qdd1 = (m22 * r1 - m12 * r2) / det;
    let qdd2 = (m11 * r2 - m12 * r1) / det;
    [qd[0], qd[1], qdd1, qdd2, dp1[0], dp2[0], dp1[1], dp2[1]]
}

pub fn random_state(p: &Plant<f64>, rng: &mut ChaCha8Rng) -> (PlantState<f64>, [f64; 2]) {
    let lim = p.joint_limits();
    let a = p.config.actuators;
    let q = [rng.gen_range(lim[0].0..lim[0].1), rng.gen_range(lim[1].0..lim[1].1)];
    let pr = |rng: &mut ChaCha8Rng, j: usize| rng.gen_range(a[j].tank_pressure..a[j].supply_pressure);
    let s = PlantState {
        q,
        q_dot: [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)],
        p_cap: [pr(rng, 0), pr(rng, 1)],
        p_rod: [pr(rng, 0), pr(rng, 1)],
        signal: [SignalPath::default(); 2],
        t: 0.0,
    };
    let sigma = if rng.gen_bool(0.1) {
        [0.0, 0.0]
    } else {
        [rng.gen_range(-30.0..30.0), rng.gen_range(-30.0..30.0)]
    };
    (s, sigma)
}

pub fn scaled(s: &PlantState<f64>) -> [f64; 8] {
    // Pressures in bar so every component weighs in comparably.
    [
        s.q[0], s.q[1], s.q_dot[0], s.q_dot[1], s.p_cap[0] * 1e-5, s.p_rod[0] * 1e-5, s.p_cap[1] * 1e-5,
        s.p_rod[1] * 1e-5,
    ]
}

pub fn run(p: &mut Plant<f64>, s0: &PlantState<f64>, u: [f64; 2], dt: f64, t: f64) -> PlantState<f64> {
    let n = (t / dt).round() as usize;
    let mut s = *s0;
    for _ in 0..n {
        s = p.step(&s, u, dt).unwrap();
    }
    s
}

/// Observed convergence order of the stepper from three step sizes.
pub fn observed_order(p: &mut Plant<f64>, s0: &PlantState<f64>, u: [f64; 2], dt: f64, t: f64) -> f64 {
    let a = scaled(&run(p, s0, u, dt, t));
    let b = scaled(&run(p, s0, u, dt / 2.0, t));
    let c = scaled(&run(p, s0, u, dt / 4.0, t));
    let norm = |x: &[f64; 8], y: &[f64; 8]| x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    (norm(&a, &b) / norm(&b, &c)).log2()
}

/// A smooth segment: valve open at constant command, signal path settled.
pub fn smooth_start(p: &mut Plant<f64>) -> (PlantState<f64>, [f64; 2]) {
    let u = [8.0, -5.0];
    let s = p.equilibrium_state([0.2, -1.8], 20e5).unwrap();
    let s = p.step(&s, u, 1e-4).unwrap();
    (s, u)
}
