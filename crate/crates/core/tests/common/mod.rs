#![allow(dead_code, clippy::needless_range_loop)]

pub mod closed_loop;
pub mod grad;
pub mod plant_oracle;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use revnm::revnm::{FeatureLayout, RevnmModel, TargetScales};
use revnm::revnm::normalize::MinMax;
use revnm::training::Sample;

/// A model with every weight drawn from `[-scale, scale]` and a random
/// (non-degenerate) normalization.
pub fn random_model(seed: u64, layout: FeatureLayout, outputs: Vec<usize>, hidden: usize, scale: f64) -> RevnmModel<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = outputs.len();
    let mut m = RevnmModel::init(layout, outputs, hidden, 2.0, &mut rng).unwrap();
    for net in m.nets_mut() {
        for w in net.params_mut() {
            *w = rng.gen_range(-scale..scale);
        }
    }
    let dim = layout.dim();
    let min: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..0.0)).collect();
    let max: Vec<f64> = min.iter().map(|lo| lo + rng.gen_range(0.5..3.0)).collect();
    let mut r = |k: usize| -> Vec<f64> { (0..k).map(|_| rng.gen_range(0.5..5.0)).collect() };
    let scales = TargetScales {
        x1_dot: r(n),
        x2_dot: r(n),
        x3_dot: r(n),
        u: r(n),
    };
    m.with_normalization(MinMax::from_bounds(min, max).unwrap(), scales).unwrap()
}

pub fn random_sample(rng: &mut ChaCha8Rng, layout: FeatureLayout) -> Sample<f64> {
    Sample {
        episode: 0,
        t: 0.0,
        h: (0..layout.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        u: (0..layout.joints).map(|_| rng.gen_range(-5.0..5.0)).collect(),
        target: (0..layout.joints)
            .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-3.0..3.0), rng.gen_range(-10.0..10.0)])
            .collect(),
    }
}
