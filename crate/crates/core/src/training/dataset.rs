//! Episode logs, preprocessing into training samples, and dataset files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::filter::{derivative, Biquad};
use crate::error::{Error, Result};
use crate::revnm::{FeatureLayout, MinMax};
use crate::Scalar;

/// Episode log header, in column order.
pub const LOG_HEADER: [&str; 11] = [
    "t", "q1", "q2", "qd1", "qd2", "P1a", "P2a", "P1b", "P2b", "u1", "u2",
];

/// One logged control tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub t: f64,
    pub q1: f64,
    pub q2: f64,
    pub qd1: f64,
    pub qd2: f64,
    #[serde(rename = "P1a")]
    pub p1a: f64,
    #[serde(rename = "P2a")]
    pub p2a: f64,
    #[serde(rename = "P1b")]
    pub p1b: f64,
    #[serde(rename = "P2b")]
    pub p2b: f64,
    pub u1: f64,
    pub u2: f64,
}

impl LogRow {
    pub fn q(&self) -> [f64; 2] {
        [self.q1, self.q2]
    }

    pub fn qd(&self) -> [f64; 2] {
        [self.qd1, self.qd2]
    }

    pub fn u(&self) -> [f64; 2] {
        [self.u1, self.u2]
    }

    fn values(&self) -> [f64; 11] {
        [
            self.t, self.q1, self.q2, self.qd1, self.qd2, self.p1a, self.p2a, self.p1b, self.p2b,
            self.u1, self.u2,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub id: usize,
    pub rows: Vec<LogRow>,
}

impl EpisodeLog {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path, id: usize) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
        if header != LOG_HEADER {
            return Err(Error::Data(format!(
                "{}: unexpected header {header:?}, expected {LOG_HEADER:?}",
                path.display()
            )));
        }
        let rows = r.deserialize().collect::<std::result::Result<Vec<LogRow>, _>>()?;
        Ok(Self { id, rows })
    }

    /// Uniform sampling interval, checked against `tolerance` (relative).
    pub fn sample_interval(&self, tolerance: f64) -> Result<f64> {
        let n = self.rows.len();
        if n < 2 {
            return Err(Error::Data(format!("episode {} has {n} rows", self.id)));
        }
        if let Some(r) = self.rows.iter().find(|r| r.values().iter().any(|v| !v.is_finite())) {
            return Err(Error::Data(format!("episode {}: non-finite row at t = {}", self.id, r.t)));
        }
        let dt = (self.rows[n - 1].t - self.rows[0].t) / (n - 1) as f64;
        for w in self.rows.windows(2) {
            let step = w[1].t - w[0].t;
            if !(step > 0.0) {
                return Err(Error::Data(format!(
                    "episode {}: timestamps not increasing at t = {}",
                    self.id, w[1].t
                )));
            }
            if (step - dt).abs() > tolerance * dt {
                return Err(Error::Data(format!(
                    "episode {}: step {step} at t = {} deviates from {dt}",
                    self.id, w[1].t
                )));
            }
        }
        Ok(dt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    /// Low-pass cutoff applied to `q` and `q̇` before differentiation (Hz).
    pub cutoff_hz: f64,
    /// Fraction of episodes held out.
    pub holdout_fraction: f64,
    pub split_seed: u64,
    /// Past samples included in the feature vector.
    pub lags: usize,
    /// Allowed relative deviation of each sampling step from the mean.
    pub dt_tolerance: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            cutoff_hz: 10.0,
            holdout_fraction: 0.2,
            split_seed: 0,
            lags: 0,
            dt_tolerance: 1e-6,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cutoff_hz > 0.0) {
            return Err(Error::Config(format!("cutoff_hz must be > 0, got {}", self.cutoff_hz)));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(Error::Config(format!(
                "holdout_fraction must be in [0, 1), got {}",
                self.holdout_fraction
            )));
        }
        if !(self.dt_tolerance >= 0.0) {
            return Err(Error::Config("dt_tolerance must be >= 0".into()));
        }
        Ok(())
    }
}

/// One training sample: features `h`, the applied input and the
/// derivative targets `[ẋ1, ẋ2, ẋ3]` of every joint.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub episode: usize,
    pub t: T,
    pub h: Vec<T>,
    pub u: Vec<T>,
    pub target: Vec<[T; 3]>,
}

/// Min-max statistics of every sample dimension, from the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats<T> {
    pub features: MinMax<T>,
    pub u: MinMax<T>,
    pub x1_dot: MinMax<T>,
    pub x2_dot: MinMax<T>,
    pub x3_dot: MinMax<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub layout: FeatureLayout,
    pub sample_interval: f64,
    pub preprocess: PreprocessConfig,
    pub train_episodes: Vec<usize>,
    pub holdout_episodes: Vec<usize>,
    /// Names of dimensions with zero range, passed through unscaled.
    pub degenerate: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub samples: Vec<Sample<T>>,
    pub train: Vec<usize>,
    pub holdout: Vec<usize>,
    pub stats: DatasetStats<T>,
    pub meta: DatasetMeta,
}

const JOINTS: usize = 2;

/// Filtered states and derivative targets of one episode.
struct Processed {
    t: Vec<f64>,
    x: [[Vec<f64>; 3]; JOINTS],
    target: [[Vec<f64>; 3]; JOINTS],
    u: [Vec<f64>; JOINTS],
}

fn process_episode(log: &EpisodeLog, cfg: &PreprocessConfig) -> Result<(Processed, f64)> {
    let dt = log.sample_interval(cfg.dt_tolerance)?;
    if log.rows.len() < 5 + cfg.lags {
        return Err(Error::Data(format!(
            "episode {} is too short ({} rows)",
            log.id,
            log.rows.len()
        )));
    }
    let filt = Biquad::butterworth_lowpass(cfg.cutoff_hz, 1.0 / dt)?;
    let mut x: [[Vec<f64>; 3]; JOINTS] = Default::default();
    let mut target: [[Vec<f64>; 3]; JOINTS] = Default::default();
    let mut u: [Vec<f64>; JOINTS] = Default::default();
    for j in 0..JOINTS {
        let q: Vec<f64> = log.rows.iter().map(|r| r.q()[j]).collect();
        let qd: Vec<f64> = log.rows.iter().map(|r| r.qd()[j]).collect();
        let x1 = filt.filtfilt(&q)?;
        let x2 = filt.filtfilt(&qd)?;
        let x3 = derivative(&x2, dt)?;
        target[j] = [derivative(&x1, dt)?, x3.clone(), derivative(&x3, dt)?];
        x[j] = [x1, x2, x3];
        u[j] = log.rows.iter().map(|r| r.u()[j]).collect();
    }
    let t = log.rows.iter().map(|r| r.t).collect();
    Ok((Processed { t, x, target, u }, dt))
}

/// Episode-level split: a seeded shuffle, the first `fraction` held out.
pub fn split_episodes(ids: &[usize], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order = ids.to_vec();
    order.sort_unstable();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_hold = if ids.len() < 2 {
        0
    } else {
        ((fraction * ids.len() as f64).round() as usize).min(ids.len() - 1)
    };
    let mut holdout = order[..n_hold].to_vec();
    let mut train = order[n_hold..].to_vec();
    holdout.sort_unstable();
    train.sort_unstable();
    (train, holdout)
}

fn feature_names(layout: FeatureLayout) -> Vec<String> {
    let mut names = vec![String::new(); layout.dim()];
    for lag in 0..=layout.lags {
        for j in 0..layout.joints {
            for k in 0..3 {
                let base = format!("x{}_{}", k + 1, j + 1);
                names[layout.index(lag, j, k)] = if lag == 0 {
                    base
                } else {
                    format!("{base}_lag{lag}")
                };
            }
        }
    }
    names
}

/// Filters and differentiates the logs, assembles samples, splits by
/// episode and fits normalization statistics on the training split.
pub fn preprocess(logs: &[EpisodeLog], cfg: &PreprocessConfig) -> Result<Dataset<f64>> {
    cfg.validate()?;
    if logs.is_empty() {
        return Err(Error::Data("no episode logs".into()));
    }
    let layout = FeatureLayout::new(JOINTS, cfg.lags);
    let mut samples = Vec::new();
    let mut interval: Option<f64> = None;
    for log in logs {
        let (p, dt) = process_episode(log, cfg)?;
        match interval {
            None => interval = Some(dt),
            Some(d0) if (dt - d0).abs() > cfg.dt_tolerance.max(1e-9) * d0 => {
                return Err(Error::Data(format!(
                    "episode {} sampled at {dt} s, others at {d0} s",
                    log.id
                )))
            }
            _ => {}
        }
        let n = p.t.len();
        let first = cfg.lags.max(2);
        for k in first..n - 2 {
            let mut h = vec![0.0; layout.dim()];
            for lag in 0..=cfg.lags {
                for j in 0..JOINTS {
                    for c in 0..3 {
                        h[layout.index(lag, j, c)] = p.x[j][c][k - lag];
                    }
                }
            }
            samples.push(Sample {
                episode: log.id,
                t: p.t[k],
                h,
                u: (0..JOINTS).map(|j| p.u[j][k]).collect(),
                target: (0..JOINTS)
                    .map(|j| [p.target[j][0][k], p.target[j][1][k], p.target[j][2][k]])
                    .collect(),
            });
        }
    }
    let ids: Vec<usize> = logs.iter().map(|l| l.id).collect();
    let mut sorted = ids.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != ids.len() {
        return Err(Error::Data("duplicate episode ids".into()));
    }
    let (_, hold_eps) = split_episodes(&ids, cfg.holdout_fraction, cfg.split_seed);
    let mut ds = Dataset::from_samples(samples, layout, &ids, &hold_eps, interval.expect("at least one episode"))?;
    ds.meta.preprocess = *cfg;
    Ok(ds)
}

impl Dataset<f64> {
    /// Assembles a dataset from ready-made samples. Episodes listed in
    /// `holdout_episodes` form the holdout split; statistics are fitted on
    /// the rest.
    pub fn from_samples(
        samples: Vec<Sample<f64>>,
        layout: FeatureLayout,
        episodes: &[usize],
        holdout_episodes: &[usize],
        sample_interval: f64,
    ) -> Result<Self> {
        for s in &samples {
            if s.h.len() != layout.dim() {
                return Err(Error::dim("sample features", layout.dim(), s.h.len()));
            }
            if s.u.len() != layout.joints || s.target.len() != layout.joints {
                return Err(Error::dim("sample inputs and targets", layout.joints, s.u.len()));
            }
        }
        let mut hold_eps = holdout_episodes.to_vec();
        hold_eps.sort_unstable();
        let mut train_eps: Vec<usize> = episodes
            .iter()
            .copied()
            .filter(|e| hold_eps.binary_search(e).is_err())
            .collect();
        train_eps.sort_unstable();
        let mut train = Vec::new();
        let mut holdout = Vec::new();
        for (i, s) in samples.iter().enumerate() {
            if hold_eps.binary_search(&s.episode).is_ok() {
                holdout.push(i);
            } else {
                train.push(i);
            }
        }
        let stats = fit_stats(&samples, &train, layout)?;
        let mut degenerate = Vec::new();
        for (name, flag) in feature_names(layout).into_iter().zip(&stats.features.degenerate) {
            if *flag {
                degenerate.push(name);
            }
        }
        for (prefix, mm) in [
            ("u", &stats.u),
            ("x1_dot", &stats.x1_dot),
            ("x2_dot", &stats.x2_dot),
            ("x3_dot", &stats.x3_dot),
        ] {
            for (j, flag) in mm.degenerate.iter().enumerate() {
                if *flag {
                    degenerate.push(format!("{prefix}_{}", j + 1));
                }
            }
        }
        Ok(Dataset {
            samples,
            train,
            holdout,
            stats,
            meta: DatasetMeta {
                layout,
                sample_interval,
                preprocess: PreprocessConfig {
                    lags: layout.lags,
                    ..Default::default()
                },
                train_episodes: train_eps,
                holdout_episodes: hold_eps,
                degenerate,
            },
        })
    }
}

fn fit_stats<T: Scalar>(
    samples: &[Sample<T>],
    train: &[usize],
    layout: FeatureLayout,
) -> Result<DatasetStats<T>> {
    if train.is_empty() {
        return Err(Error::Data("training split is empty".into()));
    }
    let rows = |f: &dyn Fn(&Sample<T>) -> Vec<T>| -> Vec<Vec<T>> {
        train.iter().map(|&i| f(&samples[i])).collect()
    };
    let fit = |rows: Vec<Vec<T>>, dim: usize| MinMax::fit(dim, rows.iter().map(|r| r.as_slice()));
    let joints = layout.joints;
    Ok(DatasetStats {
        features: fit(rows(&|s| s.h.clone()), layout.dim())?,
        u: fit(rows(&|s| s.u.clone()), joints)?,
        x1_dot: fit(rows(&|s| s.target.iter().map(|t| t[0]).collect()), joints)?,
        x2_dot: fit(rows(&|s| s.target.iter().map(|t| t[1]).collect()), joints)?,
        x3_dot: fit(rows(&|s| s.target.iter().map(|t| t[2]).collect()), joints)?,
    })
}

impl<T: Scalar> Dataset<T> {
    pub fn train_samples(&self) -> impl Iterator<Item = &Sample<T>> {
        self.train.iter().map(move |&i| &self.samples[i])
    }

    pub fn holdout_samples(&self) -> impl Iterator<Item = &Sample<T>> {
        self.holdout.iter().map(move |&i| &self.samples[i])
    }

    pub fn map<U: Scalar>(&self) -> Dataset<U> {
        let c = |v: &[T]| v.iter().map(|x| U::lit(x.as_f64())).collect::<Vec<U>>();
        Dataset {
            samples: self
                .samples
                .iter()
                .map(|s| Sample {
                    episode: s.episode,
                    t: U::lit(s.t.as_f64()),
                    h: c(&s.h),
                    u: c(&s.u),
                    target: s.target.iter().map(|t| t.map(|x| U::lit(x.as_f64()))).collect(),
                })
                .collect(),
            train: self.train.clone(),
            holdout: self.holdout.clone(),
            stats: DatasetStats {
                features: self.stats.features.map(),
                u: self.stats.u.map(),
                x1_dot: self.stats.x1_dot.map(),
                x2_dot: self.stats.x2_dot.map(),
                x3_dot: self.stats.x3_dot.map(),
            },
            meta: self.meta.clone(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaFile {
    format: String,
    version: u32,
    columns: Vec<String>,
    meta: DatasetMeta,
    stats: DatasetStats<f64>,
}

const DATASET_FORMAT: &str = "revnm-dataset";
const DATASET_VERSION: u32 = 1;

fn columns(layout: FeatureLayout) -> Vec<String> {
    let mut c = vec!["episode".to_string(), "split".into(), "t".into()];
    c.extend(feature_names(layout));
    for j in 1..=layout.joints {
        c.push(format!("u_{j}"));
    }
    for j in 1..=layout.joints {
        for k in 1..=3 {
            c.push(format!("x{k}_dot_{j}"));
        }
    }
    c
}

/// Sidecar metadata path for a dataset CSV.
pub fn meta_path(csv_path: &Path) -> std::path::PathBuf {
    csv_path.with_extension("meta.json")
}

impl Dataset<f64> {
    /// Writes the samples as CSV and the statistics and split next to it.
    pub fn write(&self, csv_path: &Path) -> Result<()> {
        let layout = self.meta.layout;
        let cols = columns(layout);
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(csv_path)?));
        w.write_record(&cols)?;
        let mut is_hold = vec![false; self.samples.len()];
        for &i in &self.holdout {
            is_hold[i] = true;
        }
        for (i, s) in self.samples.iter().enumerate() {
            let mut rec: Vec<String> = vec![
                s.episode.to_string(),
                if is_hold[i] { "holdout" } else { "train" }.into(),
                s.t.to_string(),
            ];
            rec.extend(s.h.iter().map(|v| v.to_string()));
            rec.extend(s.u.iter().map(|v| v.to_string()));
            for t in &s.target {
                rec.extend(t.iter().map(|v| v.to_string()));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        let meta = MetaFile {
            format: DATASET_FORMAT.into(),
            version: DATASET_VERSION,
            columns: cols,
            meta: self.meta.clone(),
            stats: self.stats.clone(),
        };
        let mut f = BufWriter::new(File::create(meta_path(csv_path))?);
        f.write_all(serde_json::to_string_pretty(&meta)?.as_bytes())?;
        f.flush()?;
        Ok(())
    }

    pub fn read(csv_path: &Path) -> Result<Self> {
        let meta: MetaFile = serde_json::from_reader(BufReader::new(File::open(meta_path(csv_path))?))
            .map_err(|e| Error::Data(format!("dataset metadata: {e}")))?;
        if meta.format != DATASET_FORMAT || meta.version != DATASET_VERSION {
            return Err(Error::Data(format!(
                "unsupported dataset format {} v{}",
                meta.format, meta.version
            )));
        }
        let layout = meta.meta.layout;
        let cols = columns(layout);
        if meta.columns != cols {
            return Err(Error::Data("dataset metadata columns do not match its layout".into()));
        }
        let mut r = csv::Reader::from_reader(BufReader::new(File::open(csv_path)?));
        let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
        if header != cols {
            return Err(Error::Data(format!("{}: unexpected header", csv_path.display())));
        }
        let (d, jn) = (layout.dim(), layout.joints);
        let mut samples = Vec::new();
        let mut train = Vec::new();
        let mut holdout = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let num = |k: usize| -> Result<f64> {
                rec.get(k)
                    .ok_or_else(|| Error::Data(format!("row {i}: missing column {k}")))?
                    .parse::<f64>()
                    .map_err(|e| Error::Data(format!("row {i} column {}: {e}", cols[k])))
            };
            let episode = rec[0]
                .parse::<usize>()
                .map_err(|e| Error::Data(format!("row {i} episode: {e}")))?;
            match &rec[1] {
                "train" => train.push(i),
                "holdout" => holdout.push(i),
                other => return Err(Error::Data(format!("row {i}: unknown split {other:?}"))),
            }
            let h = (0..d).map(|k| num(3 + k)).collect::<Result<Vec<_>>>()?;
            let u = (0..jn).map(|k| num(3 + d + k)).collect::<Result<Vec<_>>>()?;
            let target = (0..jn)
                .map(|j| {
                    let b = 3 + d + jn + 3 * j;
                    Ok([num(b)?, num(b + 1)?, num(b + 2)?])
                })
                .collect::<Result<Vec<_>>>()?;
            samples.push(Sample {
                episode,
                t: num(2)?,
                h,
                u,
                target,
            });
        }
        Ok(Self {
            samples,
            train,
            holdout,
            stats: meta.stats,
            meta: meta.meta,
        })
    }
}
