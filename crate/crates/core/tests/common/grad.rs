use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use revnm::revnm::{Derivatives, FeatureLayout, RevnmModel};
use revnm::training::{loss_and_gradient, LossConfig, Sample};

use super::{random_model, random_sample};

/// Both losses written through the public forward and inverse maps.
pub fn loss_oracle(m: &RevnmModel<f64>, batch: &[Sample<f64>], cfg: &LossConfig) -> (f64, f64) {
    let sc = m.scales();
    let (mut ly, mut lx, mut n) = (0.0, 0.0, 0.0);
    for s in batch {
        let u: Vec<f64> = m.outputs().iter().map(|&j| s.u[j]).collect();
        let fwd = m.forward(&s.h, &u).unwrap();
        let targets = Derivatives {
            x1_dot: m.outputs().iter().map(|&j| s.target[j][0]).collect(),
            x2_dot: m.outputs().iter().map(|&j| s.target[j][1]).collect(),
            x3_dot: m.outputs().iter().map(|&j| s.target[j][2]).collect(),
        };
        let inv = m.inverse(&s.h, &targets).unwrap();
        for (i, &j) in m.outputs().iter().enumerate() {
            let [_, x2, x3] = m.state_of(&s.h, i);
            let y = s.target[j];
            let r1 = ((fwd.x1_dot[i] - y[0]) / sc.x1_dot[i]).powi(2);
            let r2 = ((fwd.x2_dot[i] - y[1]) / sc.x2_dot[i]).powi(2);
            let r3 = ((fwd.x3_dot[i] - y[2]) / sc.x3_dot[i]).powi(2);
            ly += (r1 + r2 + r3) / 3.0;
            let w = if s.u[j].abs() < cfg.dead_band { cfg.dead_band_weight } else { 1.0 };
            let du = (inv.u[i] - s.u[j]) / sc.u[i];
            let dx2 = (inv.x2[i] - x2) / sc.x1_dot[i];
            let dx3 = (inv.x3[i] - x3) / sc.x2_dot[i];
            lx += w * du * du + cfg.kappa * (dx2 * dx2 + dx3 * dx3);
            n += 1.0;
        }
    }
    (ly / n, lx / n)
}

pub fn cases() -> Vec<(RevnmModel<f64>, Vec<Sample<f64>>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..20)
        .map(|c| {
            let layout = FeatureLayout::new(2, c % 2);
            let outputs = match c % 3 {
                0 => vec![0],
                1 => vec![1],
                _ => vec![0, 1],
            };
            let m = random_model(1000 + c as u64, layout, outputs, 3 + c % 4, 0.8);
            let mut batch: Vec<Sample<f64>> = (0..4).map(|_| random_sample(&mut rng, layout)).collect();
            // One dead-band sample per batch.
            for u in batch[0].u.iter_mut() {
                *u = rng.gen_range(-0.15..0.15);
            }
            // Targets near the model's own predictions, as late in training,
            // keep the residuals of order one.
            for s in &mut batch {
                let u: Vec<f64> = m.outputs().iter().map(|&j| s.u[j]).collect();
                let d = m.forward(&s.h, &u).unwrap();
                let sc = m.scales();
                for (i, &j) in m.outputs().iter().enumerate() {
                    s.target[j] = [
                        d.x1_dot[i] + sc.x1_dot[i] * rng.gen_range(-0.5..0.5),
                        d.x2_dot[i] + sc.x2_dot[i] * rng.gen_range(-0.5..0.5),
                        d.x3_dot[i] + sc.x3_dot[i] * rng.gen_range(-0.5..0.5),
                    ];
                }
            }
            (m, batch)
        })
        .collect()
}

/// Largest relative difference between the analytic gradient and central
/// finite differences of the oracle loss, over every parameter.
pub fn max_gradient_error(m: &RevnmModel<f64>, batch: &[Sample<f64>], cfg: &LossConfig) -> f64 {
    let refs: Vec<&Sample<f64>> = batch.iter().collect();
    let (_, g) = loss_and_gradient(m, &refs, cfg).unwrap();
    let total = |m: &RevnmModel<f64>| {
        let (ly, lx) = loss_oracle(m, batch, cfg);
        cfg.lambda_y * ly + cfg.lambda_x * lx
    };
    // Fourth-order stencils: central, and one-sided in both directions for
    // parameters where the central stencil straddles a ReLU kink.
    let h = 1e-4;
    let mut worst = 0.0f64;
    for k in 0..4 {
        for p in 0..m.nets()[k].params().len() {
            let at = |d: f64| {
                let mut x = m.clone();
                x.nets_mut()[k].params_mut()[p] += d;
                total(&x)
            };
            let wide = (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
            let f: Vec<f64> = (-4..=4).map(|i| at(i as f64 * h)).collect();
            let one_sided = |s: f64, f1: f64, f2: f64, f3: f64, f4: f64| {
                s * (-25.0 * f[4] + 48.0 * f1 - 36.0 * f2 + 16.0 * f3 - 3.0 * f4) / (12.0 * h)
            };
            let ahead = one_sided(1.0, f[5], f[6], f[7], f[8]);
            let behind = one_sided(-1.0, f[3], f[2], f[1], f[0]);
            let a = g[k][p];
            let rel = [wide, ahead, behind]
                .iter()
                .map(|fd| (a - fd).abs() / a.abs().max(fd.abs()).max(1e-7))
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(rel);
        }
    }
    worst
}
