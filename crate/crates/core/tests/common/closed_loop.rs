use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use revnm::control::{
    collapsed_command, inversion_control, stepwise_command, virtual_laws, lyapunov_envelope, lyapunov_value, BacksteppingGains, ControllerMemory, ErrorRate,
    InversionLimits, RateEstimates, Reference,
};
use revnm::plant::SyntheticPlant;
use revnm::revnm::FeatureLayout;

/// The step-wise law written out from the error coordinates alone.
pub fn oracle_command(x: [f64; 3], t: [f64; 3], rates: &RateEstimates<f64>, r: &Reference<f64>, k: [f64; 3]) -> f64 {
    let z1 = x[0] - r.x1;
    let z1d = t[0] + x[1] - r.x2;
    let z1dd = t[1] + x[2] + rates.t1_dot - r.x3;
    let z2 = z1d + k[0] * z1;
    let z2d = z1dd + k[0] * z1d;
    let z3 = z1dd + z1 + k[0] * z1d + k[1] * z2;
    let z3d_wo_u = z2d + k[0] * z1dd + k[1] * z2d;
    r.x3_dot - t[2] - rates.t2_dot - rates.t1_ddot - z3d_wo_u + z2d - z1d - z2 - k[2] * z3
}

pub struct UubRun {
    pub worst_ratio: f64,
    pub v0: f64,
    pub v_final: f64,
    pub d_max: f64,
}

/// Closes the inversion loop around a synthetic plant built from the same
/// model, with a bounded random disturbance on the top derivative held over
/// each control period. Returns the largest `V / envelope` over the run.
/// Time zero is the first warm tick.
///
/// `T1` and `T2` are scaled down by `rate_scale`: their rates are backward
/// differences, and a strong `x3` dependence closes a fast loop through
/// `u → x3 → T̈1` that the finite differences cannot follow.
pub fn uub_run(seed: u64, duration: f64, rate_scale: f64) -> UubRun {
    let layout = FeatureLayout::new(1, 0);
    let model = super::random_model(seed, layout, vec![0], 6, 0.4);
    let mut scales = model.scales().clone();
    scales.x1_dot[0] *= rate_scale;
    scales.x2_dot[0] *= rate_scale;
    let features = model.features().clone();
    let model = model.with_normalization(features, scales).unwrap();
    let mut plant = SyntheticPlant::new(model.clone(), vec![[0.6, -0.4, 0.3]]).unwrap();
    let g = [BacksteppingGains::uniform(1.0)];
    let limits = InversionLimits::default();
    let (dt, substeps, tau) = (0.01, 10, 0.05);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d_bound = 0.2;
    let reference = |t: f64| {
        let w = 1.2;
        Reference {
            x1: 0.3 * (w * t).sin(),
            x2: 0.3 * w * (w * t).cos(),
            x3: -0.3 * w * w * (w * t).sin(),
            x3_dot: -0.3 * w * w * w * (w * t).cos(),
        }
    };
    let mut mem = ControllerMemory::cold(1);
    let mut start: Option<(f64, f64)> = None;
    let mut d_log = Vec::new();
    let mut values = Vec::new();
    let steps = (duration / dt).round() as usize + 3;
    for k in 0..steps {
        let t = k as f64 * dt;
        let (out, next) = inversion_control(
            &model,
            &plant.features(),
            &[reference(t)],
            &g,
            ErrorRate::Model,
            &limits,
            &mem,
            dt,
            tau,
        )
        .unwrap();
        mem = next;
        if out.warm {
            let v = lyapunov_value(out.laws[0].z());
            let (t0, _) = *start.get_or_insert((t, v));
            values.push((t - t0, v));
        }
        let d = rng.gen_range(-d_bound..d_bound);
        d_log.push(d);
        for _ in 0..substeps {
            plant.step(&out.u, &[d], dt / substeps as f64).unwrap();
        }
    }
    let d_max = d_log.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let gamma = 1.5 * d_max * d_max;
    let v0 = start.unwrap().1;
    let worst_ratio = values
        .iter()
        .map(|&(t, v)| v / lyapunov_envelope(v0, 0.5, gamma, t))
        .fold(0.0, f64::max);
    UubRun {
        worst_ratio,
        v0,
        v_final: values.last().unwrap().1,
        d_max,
    }
}

/// Largest relative gap between the collapsed law, the library's step-wise
/// law and the written-out oracle over `n` random states and gains.
pub fn collapsed_vs_stepwise(seed: u64, n: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let mut u = |a: f64| rng.gen_range(-a..a);
        let x = [u(2.0), u(3.0), u(10.0)];
        let t = [u(1.0), u(5.0), u(20.0)];
        let rates = RateEstimates {
            t1_dot: u(5.0),
            t2_dot: u(20.0),
            t1_ddot: u(50.0),
        };
        let r = Reference {
            x1: u(2.0),
            x2: u(3.0),
            x3: u(10.0),
            x3_dot: u(30.0),
        };
        let k = [rng.gen_range(0.6..10.0), rng.gen_range(0.6..10.0), rng.gen_range(0.6..10.0)];
        let g = BacksteppingGains::new(k[0], k[1], k[2]).unwrap();
        let laws = virtual_laws(x, t[0], t[1], rates.t1_dot, &r, &g, ErrorRate::Model);
        let c = collapsed_command(&laws, t[2], &rates, &r, &g);
        let s = stepwise_command(&laws, t[2], &rates, &r, &g);
        let o = oracle_command(x, t, &rates, &r, k);
        let scale = c.abs().max(1.0);
        worst = worst.max((c - s).abs() / scale).max((c - o).abs() / scale);
    }
    worst
}
