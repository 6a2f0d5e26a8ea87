mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use revnm::plant::{Plant, PlantState};

use common::plant_oracle::{observed_order, oracle, plant, random_state, smooth_start};

#[test]
fn derivative_matches_straight_line_oracle() {
    let p = plant();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..1000 {
        let (s, sigma) = random_state(&p, &mut rng);
        let d = p.derivative_with_signal(&s, sigma).unwrap();
        let got = [
            d.q_dot[0], d.q_dot[1], d.q_ddot[0], d.q_ddot[1], d.p_cap_dot[0], d.p_rod_dot[0], d.p_cap_dot[1],
            d.p_rod_dot[1],
        ];
        let want = oracle(&p.config, s.q, s.q_dot, s.p_cap, s.p_rod, sigma);
        for k in 0..8 {
            let tol = 1e-10 * want[k].abs().max(1.0);
            assert!((got[k] - want[k]).abs() <= tol, "component {k}: {} vs {}", got[k], want[k]);
        }
    }
}

#[test]
fn rk4_converges_at_fourth_order() {
    let mut p = plant();
    let (s, u) = smooth_start(&mut p);
    let order = observed_order(&mut p, &s, u, 2e-3, 1.0);
    assert!(order >= 3.5, "observed order {order}");
    assert_eq!(p.clamp_events(), 0);
}

#[test]
fn coast_down_energy_balance() {
    // Valve closed (inside the dead zone): the only energy exchange is
    // pressure work on the pistons, friction and damping.
    let mut p = plant();
    let mut s = p.equilibrium_state([0.2, -1.8], 20e5).unwrap();
    s.p_cap[0] += 15e5;
    s.p_rod[1] += 10e5;
    let dt = 1e-4;
    let u = [0.0, 0.0];
    let e0 = p.mechanical_energy(&s);
    let net = |p: &Plant<f64>, s: &PlantState<f64>| {
        let w = p.power(s).unwrap();
        (w.pressure - w.cylinder_friction - w.rotary_damping, w.pressure.abs() + w.cylinder_friction + w.rotary_damping)
    };
    let (mut prev, mut prev_abs) = net(&p, &s);
    let mut work = 0.0;
    let mut flow = 0.0;
    for _ in 0..20_000 {
        s = p.step(&s, u, dt).unwrap();
        let (w, a) = net(&p, &s);
        work += 0.5 * dt * (prev + w);
        flow += 0.5 * dt * (prev_abs + a);
        prev = w;
        prev_abs = a;
    }
    let de = p.mechanical_energy(&s) - e0;
    assert!(flow > 1.0);
    assert!((de - work).abs() <= 0.02 * flow, "ΔE {de} vs net work {work} (gross {flow})");
}

#[test]
fn leaving_the_stroke_is_an_error_not_nan() {
    let p = plant();
    let mut s = p.equilibrium_state([0.2, -1.8], 20e5).unwrap();
    s.q[0] = p.joint_limits()[0].1 + 0.05;
    assert!(p.derivative(&s, [0.0, 0.0]).is_err());
}
