//! The experiment commands behind the command-line tool. Each reads its
//! inputs from and writes its outputs to the configured output directory.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::collect::collect_episodes;
use super::config::{ControllerKind, ExperimentConfig};
use super::episode::{episode_metrics, fmt, simulate_episode, Metrics, ModelSet, Tick};
use super::evaluate::holdout_accuracy;
use crate::error::{Error, Result};
use crate::revnm::{load_model, save_model};
use crate::training::{holdout_losses, preprocess, train, write_loss_records, Dataset, EpisodeLog};

pub const DATASET_FILE: &str = "dataset.csv";
pub const EPISODE_DIR: &str = "episodes";

/// Writes `key=value` lines.
pub fn write_key_values(path: &Path, kv: &[(String, String)]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    for (k, v) in kv {
        writeln!(f, "{k}={v}")?;
    }
    Ok(())
}

pub fn read_key_values(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::Data(format!("{}: malformed line {l:?}", path.display())))
        })
        .collect()
}

fn out_dir(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let d = cfg.run.out.clone();
    fs::create_dir_all(&d)?;
    Ok(d)
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

pub fn episode_path(dir: &Path, id: usize) -> PathBuf {
    dir.join(EPISODE_DIR).join(format!("episode_{id:04}.csv"))
}

/// Collects excitation episodes and builds the preprocessed dataset.
pub fn run_collect(cfg: &ExperimentConfig) -> Result<Vec<(String, String)>> {
    let out = out_dir(cfg)?;
    let (logs, summary) = collect_episodes(cfg)?;
    fs::create_dir_all(out.join(EPISODE_DIR))?;
    for log in &logs {
        log.write_csv(&episode_path(&out, log.id))?;
    }
    let ds = preprocess(&logs, &cfg.preprocess)?;
    ds.write(&out.join(DATASET_FILE))?;
    let res = vec![
        kv("seed", cfg.run.seed),
        kv("episodes", summary.episodes),
        kv("rejected_draws", summary.retries),
        kv("log_rows", summary.samples),
        kv("samples", ds.samples.len()),
        kv("train_samples", ds.train.len()),
        kv("holdout_samples", ds.holdout.len()),
        kv("sample_interval_s", fmt(ds.meta.sample_interval)),
    ];
    write_key_values(&out.join("collect.txt"), &res)?;
    Ok(res)
}

/// Re-reads the episode logs written by `collect`.
pub fn read_episodes(dir: &Path, count: usize) -> Result<Vec<EpisodeLog>> {
    (0..count).map(|i| EpisodeLog::read_csv(&episode_path(dir, i), i)).collect()
}

/// Model groups: one per joint, or one for both.
fn model_groups(cfg: &ExperimentConfig) -> Vec<(&'static str, Vec<usize>, PathBuf)> {
    let m = &cfg.model;
    if m.coupled {
        vec![("joint", vec![0, 1], cfg.resolve(&m.joint))]
    } else {
        vec![
            ("boom", vec![0], cfg.resolve(&m.boom)),
            ("arm", vec![1], cfg.resolve(&m.arm)),
        ]
    }
}

pub fn load_models(cfg: &ExperimentConfig) -> Result<ModelSet> {
    let models = model_groups(cfg)
        .into_iter()
        .map(|(_, _, p)| load_model(&p))
        .collect::<Result<Vec<_>>>()?;
    ModelSet::new(models)
}

pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset<f64>> {
    Dataset::read(&cfg.run.out.join(DATASET_FILE))
}

/// Trains the models on the collected dataset.
pub fn run_train(cfg: &ExperimentConfig) -> Result<Vec<(String, String)>> {
    let out = out_dir(cfg)?;
    let ds = load_dataset(cfg)?;
    let mut res = vec![kv("seed", cfg.train.seed), kv("iterations", cfg.train.iterations)];
    for (name, outputs, path) in model_groups(cfg) {
        let (model, records) = train(&ds, outputs, &cfg.train)?;
        save_model(&model, &path)?;
        write_loss_records(&records, &out.join(format!("loss_{name}.csv")))?;
        let last = records.last().expect("at least one iteration");
        res.push(kv(&format!("{name}_final_loss_x"), fmt(last.loss_x)));
        res.push(kv(&format!("{name}_final_loss_y"), fmt(last.loss_y)));
        if !ds.holdout.is_empty() {
            let h = holdout_losses(&model, &ds, &cfg.train.loss())?;
            res.push(kv(&format!("{name}_holdout_loss_x"), fmt(h.loss_x)));
            res.push(kv(&format!("{name}_holdout_loss_y"), fmt(h.loss_y)));
        }
    }
    write_key_values(&out.join("train.txt"), &res)?;
    Ok(res)
}

/// Holdout prediction accuracy of the trained models.
pub fn run_evaluate(cfg: &ExperimentConfig) -> Result<Vec<(String, String)>> {
    let out = out_dir(cfg)?;
    let ds = load_dataset(cfg)?;
    let set = load_models(cfg)?;
    let acc = holdout_accuracy(&set, &ds, cfg.evaluate.substeps)?;
    let mut w = csv::Writer::from_path(out.join("eta_histogram.csv"))?;
    w.write_record(["bin_lo", "bin_hi", "count_boom", "count_arm"])?;
    for b in 0..100 {
        w.write_record([
            fmt(b as f64 / 100.0),
            fmt((b + 1) as f64 / 100.0),
            acc[0].histogram[b].to_string(),
            acc[1].histogram[b].to_string(),
        ])?;
    }
    w.flush()?;
    let res = vec![
        kv("eta_boom", fmt(acc[0].eta)),
        kv("eta_arm", fmt(acc[1].eta)),
        kv("samples_boom", acc[0].used),
        kv("samples_arm", acc[1].used),
        kv("excluded_boom", acc[0].excluded),
        kv("excluded_arm", acc[1].excluded),
        kv("substeps", cfg.evaluate.substeps),
    ];
    write_key_values(&out.join("evaluate.txt"), &res)?;
    Ok(res)
}

/// Tracking time-series header. Joint quantities carry radians, tip
/// positions meters; the commands are unitless signals.
pub const TIMESERIES_HEADER: [&str; 15] = [
    "t_s", "q1_ref_rad", "q2_ref_rad", "q1_rad", "q2_rad", "qd1_rad_s", "qd2_rad_s", "qdd1_rad_s2",
    "qdd2_rad_s2", "tip_x_m", "tip_y_m", "tip_ref_x_m", "tip_ref_y_m", "u1", "u2",
];

/// A tracking time series read back from `timeseries.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Timeseries {
    pub rows: Vec<[f64; 15]>,
}

impl Timeseries {
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let k = TIMESERIES_HEADER
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| Error::Data(format!("no time-series column {name:?}")))?;
        Ok(self.rows.iter().map(|r| r[k]).collect())
    }
}

/// Reads a time series, rejecting files whose header or unit tags differ.
pub fn read_timeseries(path: &Path) -> Result<Timeseries> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != TIMESERIES_HEADER {
        return Err(Error::Data(format!(
            "{}: unexpected header {header:?}, expected {TIMESERIES_HEADER:?}",
            path.display()
        )));
    }
    let rows = r.deserialize().collect::<std::result::Result<Vec<[f64; 15]>, _>>()?;
    Ok(Timeseries { rows })
}

fn write_ticks(dir: &Path, ticks: &[Tick]) -> Result<()> {
    let mut w = csv::Writer::from_path(dir.join("timeseries.csv"))?;
    w.write_record(TIMESERIES_HEADER)?;
    for t in ticks {
        let row = [
            t.t, t.q_ref[0], t.q_ref[1], t.q[0], t.q[1], t.q_dot[0], t.q_dot[1], t.x3[0], t.x3[1], t.tip[0],
            t.tip[1], t.tip_ref[0], t.tip_ref[1], t.u_sat[0], t.u_sat[1],
        ];
        w.write_record(row.iter().map(|v| fmt(*v)))?;
    }
    w.flush()?;
    for (j, name) in ["boom", "arm"].iter().enumerate() {
        let mut w = csv::Writer::from_path(dir.join(format!("ticks_{name}.csv")))?;
        w.write_record(["t", "z1", "z2", "z3", "u_pd", "u_inv", "u_sat", "V"])?;
        for t in ticks {
            let z = t.z[j];
            let row = [t.t, z[0], z[1], z[2], t.u_pd[j], t.u_inv[j], t.u_sat[j], t.v[j]];
            w.write_record(row.iter().map(|v| fmt(*v)))?;
        }
        w.flush()?;
    }
    Ok(())
}

fn write_metrics(dir: &Path, m: &Metrics) -> Result<()> {
    let kv = m.to_key_values();
    write_key_values(&dir.join("metrics.txt"), &kv)?;
    let mut w = csv::Writer::from_path(dir.join("metrics.csv"))?;
    w.write_record(kv.iter().map(|(k, _)| k))?;
    w.write_record(kv.iter().map(|(_, v)| v))?;
    w.flush()?;
    Ok(())
}

/// Runs one tracking experiment. Logs are written even when the run stops
/// early; the error is returned afterwards.
pub fn run_track(cfg: &ExperimentConfig, kind: ControllerKind) -> Result<Metrics> {
    let out = out_dir(cfg)?;
    let models = if kind == ControllerKind::Hybrid {
        Some(load_models(cfg)?)
    } else {
        None
    };
    let dir = out.join(format!("track_{}", kind.name()));
    fs::create_dir_all(&dir)?;
    let (ticks, clamps, err) = simulate_episode(cfg, kind, models.as_ref());
    write_ticks(&dir, &ticks)?;
    if let Some(e) = err {
        return Err(e);
    }
    let m = episode_metrics(cfg, kind, &ticks, clamps)?;
    write_metrics(&dir, &m)?;
    Ok(m)
}

/// Tracks with every controller and tabulates both errors.
pub fn run_compare(cfg: &ExperimentConfig) -> Result<Vec<Metrics>> {
    let out = out_dir(cfg)?;
    let mut all = Vec::new();
    for kind in ControllerKind::ALL {
        all.push(run_track(cfg, kind)?);
    }
    let mut w = csv::Writer::from_path(out.join("compare.csv"))?;
    w.write_record(["controller", "label", "rmse_path_m", "rmse_trajectory_m", "formula"])?;
    for m in &all {
        w.write_record([
            m.controller.name().to_string(),
            m.controller.label().to_string(),
            fmt(m.rmse_path),
            fmt(m.rmse_trajectory),
            m.formula.name().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(all)
}
