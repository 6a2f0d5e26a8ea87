//! Holdout prediction accuracy.

use super::episode::ModelSet;
use super::metrics::{prediction_accuracy, Accuracy, ETA_FLOOR};
use crate::error::{Error, Result};
use crate::revnm::RevnmModel;
use crate::training::Dataset;

/// Predicted change of `x1` for each model output over `dt`, integrating the
/// model's own states with `substeps` explicit Euler steps while the other
/// features and `u` stay fixed. One substep is the plain one-step prediction.
pub fn rollout_delta(m: &RevnmModel<f64>, h: &[f64], u: &[f64], dt: f64, substeps: usize) -> Result<Vec<f64>> {
    if substeps == 0 {
        return Err(Error::Config("substeps must be >= 1".into()));
    }
    let layout = m.layout();
    let mut h = h.to_vec();
    let h0: Vec<f64> = (0..m.outputs().len()).map(|i| m.state_of(&h, i)[0]).collect();
    let step = dt / substeps as f64;
    for _ in 0..substeps {
        let d = m.forward(&h, u)?;
        for (i, &j) in m.outputs().iter().enumerate() {
            h[layout.index(0, j, 0)] += step * d.x1_dot[i];
            h[layout.index(0, j, 1)] += step * d.x2_dot[i];
            h[layout.index(0, j, 2)] += step * d.x3_dot[i];
        }
    }
    Ok((0..m.outputs().len()).map(|i| m.state_of(&h, i)[0] - h0[i]).collect())
}

/// Accuracy of the predicted joint-angle change between consecutive holdout
/// samples, per joint.
pub fn holdout_accuracy(set: &ModelSet, ds: &Dataset<f64>, substeps: usize) -> Result<[Accuracy; 2]> {
    let dt = ds.meta.sample_interval;
    let layout = ds.meta.layout;
    if set.layout() != layout {
        return Err(Error::ModelFile(format!(
            "model layout {:?} does not match the dataset layout {:?}",
            set.layout(),
            layout
        )));
    }
    let mut pred = [Vec::new(), Vec::new()];
    let mut actual = [Vec::new(), Vec::new()];
    for w in ds.holdout.windows(2) {
        let (a, b) = (&ds.samples[w[0]], &ds.samples[w[1]]);
        if a.episode != b.episode || ((b.t - a.t) - dt).abs() > 1e-6 * dt.max(1.0) {
            continue;
        }
        for m in &set.models {
            let u: Vec<f64> = m.outputs().iter().map(|&j| a.u[j]).collect();
            let d = rollout_delta(m, &a.h, &u, dt, substeps)?;
            for (i, &j) in m.outputs().iter().enumerate() {
                pred[j].push(d[i]);
                let k = layout.index(0, j, 0);
                actual[j].push(b.h[k] - a.h[k]);
            }
        }
    }
    Ok([
        prediction_accuracy(&pred[0], &actual[0], ETA_FLOOR)?,
        prediction_accuracy(&pred[1], &actual[1], ETA_FLOOR)?,
    ])
}
