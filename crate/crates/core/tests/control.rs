mod common;

use revnm::control::{gain_polynomials, virtual_laws, BacksteppingGains, ErrorRate, Reference};

use common::closed_loop::{collapsed_vs_stepwise, uub_run};

#[test]
fn collapsed_law_matches_stepwise() {
    assert_eq!(gain_polynomials(1.0, 1.0, 1.0), (3.0, 5.0, 3.0));
    let worst = collapsed_vs_stepwise(11, 1000);
    assert!(worst <= 1e-10, "{worst:e}");
}

#[test]
fn measured_rates_match_model_rates_for_zero_networks() {
    let g = BacksteppingGains::new(1.5, 2.0, 3.0).unwrap();
    let r = Reference {
        x1: 0.2,
        x2: -0.1,
        x3: 0.4,
        x3_dot: 1.0,
    };
    let a = virtual_laws([0.5f64, 0.3, -0.2], 0.0, 0.0, 0.0, &r, &g, ErrorRate::Model);
    let b = virtual_laws([0.5, 0.3, -0.2], 0.0, 0.0, 0.0, &r, &g, ErrorRate::Measured);
    for (p, q) in a.z().iter().zip(b.z()) {
        assert!((p - q).abs() < 1e-14);
    }
}

#[test]
fn closed_loop_stays_inside_envelope() {
    for seed in 1..=6 {
        let r = uub_run(seed, 30.0, 0.1);
        assert!(r.worst_ratio <= 1.0, "seed {seed}: V/envelope reached {}", r.worst_ratio);
        assert!(r.v_final < r.v0);
    }
}

#[test]
fn envelope_limit_is_gamma_over_lambda() {
    let r = uub_run(2, 30.0, 0.1);
    let gamma = 1.5 * r.d_max * r.d_max;
    assert!(r.v_final <= gamma / 0.5);
}
