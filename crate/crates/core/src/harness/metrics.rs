//! Tracking and prediction metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the distance series is aggregated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RmseFormula {
    /// `√(mean ‖e‖²)`.
    #[default]
    Squared,
    /// `√(mean ‖e‖)`, the square root of the mean unsquared distance.
    Literal,
}

impl RmseFormula {
    pub fn name(&self) -> &'static str {
        match self {
            RmseFormula::Squared => "squared",
            RmseFormula::Literal => "literal",
        }
    }

    pub(crate) fn aggregate(&self, d: impl Iterator<Item = f64>) -> Result<f64> {
        let mut n = 0usize;
        let mut acc = 0.0;
        for x in d {
            acc += match self {
                RmseFormula::Squared => x * x,
                RmseFormula::Literal => x,
            };
            n += 1;
        }
        if n == 0 {
            return Err(Error::Data("empty series".into()));
        }
        Ok((acc / n as f64).sqrt())
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Time-aligned tracking error.
pub fn rmse_trajectory(actual: &[[f64; 2]], reference: &[[f64; 2]], f: RmseFormula) -> Result<f64> {
    if actual.len() != reference.len() {
        return Err(Error::dim("trajectory rmse series", reference.len(), actual.len()));
    }
    f.aggregate(actual.iter().zip(reference).map(|(a, r)| dist(*a, *r)))
}

/// Distance from `p` to the polyline through `path`.
pub fn distance_to_path(p: [f64; 2], path: &[[f64; 2]]) -> f64 {
    if path.len() == 1 {
        return dist(p, path[0]);
    }
    let mut best = f64::INFINITY;
    for w in path.windows(2) {
        let (a, b) = (w[0], w[1]);
        let ab = [b[0] - a[0], b[1] - a[1]];
        let len2 = ab[0] * ab[0] + ab[1] * ab[1];
        let s = if len2 > 0.0 {
            (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        best = best.min(dist(p, [a[0] + s * ab[0], a[1] + s * ab[1]]));
    }
    best
}

/// Time-free error: each sample's distance to the nearest point of the
/// densely sampled reference path.
pub fn rmse_path(actual: &[[f64; 2]], path: &[[f64; 2]], f: RmseFormula) -> Result<f64> {
    if path.is_empty() {
        return Err(Error::Data("empty reference path".into()));
    }
    f.aggregate(actual.iter().map(|p| distance_to_path(*p, path)))
}

/// Prediction accuracy summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    /// Expected value of the per-sample accuracy over its histogram.
    pub eta: f64,
    /// Sample counts per 1% bin, `[0, 0.01), …, [0.99, 1.0]`.
    pub histogram: Vec<usize>,
    pub used: usize,
    /// Samples with `|Δx|` below the floor.
    pub excluded: usize,
}

pub const ETA_FLOOR: f64 = 1e-5;

/// `η = 1 − |(Δx̂ − Δx)/Δx|` per sample, clipped to `[0, 1]`, binned in 1%
/// intervals; the expected value weights each bin by its frequency and its
/// mean accuracy.
pub fn prediction_accuracy(predicted: &[f64], actual: &[f64], floor: f64) -> Result<Accuracy> {
    if predicted.len() != actual.len() {
        return Err(Error::dim("prediction accuracy series", actual.len(), predicted.len()));
    }
    let mut counts = vec![0usize; 100];
    let mut sums = vec![0.0f64; 100];
    let mut excluded = 0;
    for (p, a) in predicted.iter().zip(actual) {
        if !(a.abs() >= floor) {
            excluded += 1;
            continue;
        }
        let eta = (1.0 - ((p - a) / a).abs()).clamp(0.0, 1.0);
        let bin = ((eta * 100.0) as usize).min(99);
        counts[bin] += 1;
        sums[bin] += eta;
    }
    let used: usize = counts.iter().sum();
    if used == 0 {
        return Err(Error::Data(format!(
            "accuracy undefined: all {excluded} samples below the |Δx| floor {floor}"
        )));
    }
    let eta = counts
        .iter()
        .zip(&sums)
        .filter(|(c, _)| **c > 0)
        .map(|(c, s)| (*c as f64 / used as f64) * (s / *c as f64))
        .sum();
    Ok(Accuracy {
        eta,
        histogram: counts,
        used,
        excluded,
    })
}
