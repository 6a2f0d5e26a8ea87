//! Minibatch training loop.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{Adam, AdamConfig};
use super::dataset::{Dataset, Sample};
use super::loss::{loss_and_gradient, losses, LossConfig, Losses};
use crate::error::{Error, Result};
use crate::revnm::{MinMax, RevnmModel, TargetScales};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub iterations: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub lambda_y: f64,
    pub lambda_x: f64,
    pub kappa: f64,
    pub dead_band: f64,
    pub dead_band_weight: f64,
    /// Parameters are clipped to `[-weight_bound, weight_bound]` after each step.
    pub weight_bound: f64,
    pub hidden: usize,
    /// Soft-clamp constant `c` of `S = c·atan(S_raw)`.
    pub clamp: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        let loss = LossConfig::default();
        Self {
            iterations: 5000,
            batch_size: 256,
            seed: 0,
            learning_rate: adam.learning_rate,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
            lambda_y: loss.lambda_y,
            lambda_x: loss.lambda_x,
            kappa: loss.kappa,
            dead_band: loss.dead_band,
            dead_band_weight: loss.dead_band_weight,
            weight_bound: 10.0,
            hidden: 64,
            clamp: 2.0,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    pub fn loss(&self) -> LossConfig {
        LossConfig {
            lambda_y: self.lambda_y,
            lambda_x: self.lambda_x,
            kappa: self.kappa,
            dead_band: self.dead_band,
            dead_band_weight: self.dead_band_weight,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.adam().validate()?;
        self.loss().validate()?;
        if self.batch_size == 0 || self.hidden == 0 {
            return Err(Error::Config("batch_size and hidden must be > 0".into()));
        }
        if !(self.weight_bound > 0.0) || !(self.clamp > 0.0) {
            return Err(Error::Config("weight_bound and clamp must be > 0".into()));
        }
        Ok(())
    }
}

/// Batch losses after each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub iteration: usize,
    pub loss_x: f64,
    pub loss_y: f64,
}

pub fn write_loss_records(records: &[LossRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Iterations above the divergence threshold tolerated before aborting.
pub const DIVERGENCE_PATIENCE: usize = 100;
pub const DIVERGENCE_FACTOR: f64 = 1e3;

/// Normalization for a model predicting `outputs`, taken from the dataset's
/// training-split statistics.
pub fn normalization_for<T: Scalar>(
    ds: &Dataset<T>,
    outputs: &[usize],
) -> (MinMax<T>, TargetScales<T>) {
    let st = &ds.stats;
    let pick = |mm: &MinMax<T>| outputs.iter().map(|&j| mm.range(j)).collect();
    (
        st.features.clone(),
        TargetScales {
            x1_dot: pick(&st.x1_dot),
            x2_dot: pick(&st.x2_dot),
            x3_dot: pick(&st.x3_dot),
            u: pick(&st.u),
        },
    )
}

/// Trains a fresh model for `outputs` on the training split.
///
/// Deterministic given `cfg.seed` and the dataset.
pub fn train<T: Scalar>(
    ds: &Dataset<T>,
    outputs: Vec<usize>,
    cfg: &TrainConfig,
) -> Result<(RevnmModel<T>, Vec<LossRecord>)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let model = RevnmModel::init(ds.meta.layout, outputs.clone(), cfg.hidden, T::lit(cfg.clamp), &mut rng)?;
    let (features, scales) = normalization_for(ds, &outputs);
    let model = model.with_normalization(features, scales)?;
    train_from(model, ds, cfg, &mut rng)
}

/// Continues training `model` (its normalization is kept as is).
pub fn train_from<T: Scalar, R: Rng>(
    mut model: RevnmModel<T>,
    ds: &Dataset<T>,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<(RevnmModel<T>, Vec<LossRecord>)> {
    cfg.validate()?;
    if ds.train.is_empty() {
        return Err(Error::Data("training split is empty".into()));
    }
    let adam_cfg = cfg.adam();
    let loss_cfg = cfg.loss();
    let bound = T::lit(cfg.weight_bound);
    let mut opt: Vec<Adam<T>> = model.nets().iter().map(|n| Adam::new(n.params().len())).collect();
    let mut records = Vec::with_capacity(cfg.iterations);
    let mut initial: Option<f64> = None;
    let mut above = 0usize;
    let mut batch: Vec<&Sample<T>> = Vec::with_capacity(cfg.batch_size);
    for it in 0..cfg.iterations {
        batch.clear();
        for _ in 0..cfg.batch_size {
            batch.push(&ds.samples[ds.train[rng.gen_range(0..ds.train.len())]]);
        }
        let (l, grads) = loss_and_gradient(&model, &batch, &loss_cfg)?;
        let total = l.total(&loss_cfg).as_f64();
        if !total.is_finite() {
            return Err(Error::NonFinite(format!("training loss at iteration {it}")));
        }
        records.push(LossRecord {
            iteration: it,
            loss_x: l.loss_x.as_f64(),
            loss_y: l.loss_y.as_f64(),
        });
        let init = *initial.get_or_insert(total);
        if total > DIVERGENCE_FACTOR * init {
            above += 1;
            if above >= DIVERGENCE_PATIENCE {
                return Err(Error::Diverged {
                    iteration: it,
                    loss: total,
                    initial: init,
                });
            }
        } else {
            above = 0;
        }
        for (k, net) in model.nets_mut().iter_mut().enumerate() {
            let p = net.params_mut();
            opt[k].step(p, &grads[k], &adam_cfg)?;
            for w in p.iter_mut() {
                *w = w.max(-bound).min(bound);
            }
        }
    }
    Ok((model, records))
}

/// Losses of `model` over the holdout split.
pub fn holdout_losses<T: Scalar>(model: &RevnmModel<T>, ds: &Dataset<T>, cfg: &LossConfig) -> Result<Losses<T>> {
    let batch: Vec<&Sample<T>> = ds.holdout_samples().collect();
    losses(model, &batch, cfg)
}
