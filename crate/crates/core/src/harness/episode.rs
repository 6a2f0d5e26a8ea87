//! Closed-loop tracking episodes.

use serde::{Deserialize, Serialize};

use super::config::{ControllerKind, ExperimentConfig};
use super::metrics::{distance_to_path, prediction_accuracy, Accuracy, RmseFormula, ETA_FLOOR};
use super::trajectory::{gen_reference, reference_tip, TwoLink};
use crate::control::{lyapunov_value, pd_comp_control, pd_control, HybridController, Reference};
use crate::error::{Error, Result};
use crate::plant::{Plant, PlantState};
use crate::revnm::{FeatureLayout, RevnmModel};

/// Models covering both joints exactly once.
#[derive(Debug, Clone)]
pub struct ModelSet {
    pub models: Vec<RevnmModel<f64>>,
}

impl ModelSet {
    pub fn new(models: Vec<RevnmModel<f64>>) -> Result<Self> {
        let mut seen = [false; 2];
        let mut lags = None;
        for m in &models {
            if m.layout().joints != 2 {
                return Err(Error::ModelFile(format!(
                    "model features cover {} joints, expected 2",
                    m.layout().joints
                )));
            }
            if *lags.get_or_insert(m.layout().lags) != m.layout().lags {
                return Err(Error::ModelFile("models disagree on the number of lags".into()));
            }
            for &j in m.outputs() {
                if j >= 2 || seen[j] {
                    return Err(Error::ModelFile(format!("joint {j} predicted twice or out of range")));
                }
                seen[j] = true;
            }
        }
        if !seen.iter().all(|s| *s) {
            return Err(Error::ModelFile("models must predict both joints".into()));
        }
        Ok(Self { models })
    }

    pub fn layout(&self) -> FeatureLayout {
        self.models[0].layout()
    }
}

/// One control tick.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Tick {
    pub t: f64,
    pub q_ref: [f64; 2],
    pub q: [f64; 2],
    pub q_dot: [f64; 2],
    /// Measured `q̈` used as the third state.
    pub x3: [f64; 2],
    pub tip: [f64; 2],
    pub tip_ref: [f64; 2],
    pub z: [[f64; 3]; 2],
    pub u_pd: [f64; 2],
    pub u_inv: [f64; 2],
    pub u_sat: [f64; 2],
    /// `½|z|²` per joint.
    pub v: [f64; 2],
    /// Model prediction of the joint-angle change over the next tick.
    pub predicted_dq: Option<[f64; 2]>,
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub controller: ControllerKind,
    pub formula: RmseFormula,
    pub rmse_path: f64,
    pub rmse_trajectory: f64,
    /// First time counted in the errors.
    pub start_time: f64,
    pub samples: usize,
    pub saturation_fraction: f64,
    pub max_abs_z1: [f64; 2],
    pub clamp_events: u64,
    /// One-step prediction accuracy of the models along the run.
    pub eta: Option<[f64; 2]>,
}

impl Metrics {
    pub fn to_key_values(&self) -> Vec<(String, String)> {
        let mut kv = vec![
            ("controller".to_string(), self.controller.name().to_string()),
            ("formula".into(), self.formula.name().into()),
            ("rmse_path_m".into(), fmt(self.rmse_path)),
            ("rmse_trajectory_m".into(), fmt(self.rmse_trajectory)),
            ("start_time_s".into(), fmt(self.start_time)),
            ("samples".into(), self.samples.to_string()),
            ("saturation_fraction".into(), fmt(self.saturation_fraction)),
            ("max_abs_z1_boom_rad".into(), fmt(self.max_abs_z1[0])),
            ("max_abs_z1_arm_rad".into(), fmt(self.max_abs_z1[1])),
            ("pressure_clamp_events".into(), self.clamp_events.to_string()),
        ];
        if let Some(e) = self.eta {
            kv.push(("eta_boom".into(), fmt(e[0])));
            kv.push(("eta_arm".into(), fmt(e[1])));
        }
        kv
    }
}

/// Shortest representation that parses back to the same value.
pub fn fmt(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Debug, Clone)]
pub struct EpisodeResult {
    pub ticks: Vec<Tick>,
    pub metrics: Metrics,
}

/// Backward difference of `q̇` over a fixed number of plant steps.
struct RateWindow {
    history: std::collections::VecDeque<[f64; 2]>,
    steps: usize,
    dt: f64,
}

impl RateWindow {
    fn new(steps: usize, dt: f64) -> Self {
        Self {
            history: std::collections::VecDeque::with_capacity(steps + 1),
            steps,
            dt,
        }
    }

    fn push(&mut self, qd: [f64; 2]) {
        if self.history.len() == self.steps + 1 {
            self.history.pop_front();
        }
        self.history.push_back(qd);
    }

    fn estimate(&self) -> [f64; 2] {
        let n = self.history.len();
        if n < 2 {
            return [0.0; 2];
        }
        let (a, b) = (self.history[0], self.history[n - 1]);
        let span = (n - 1) as f64 * self.dt;
        [(b[0] - a[0]) / span, (b[1] - a[1]) / span]
    }
}

/// Reference tip path sampled for the time-free error.
pub fn reference_path(cfg: &ExperimentConfig, kin: &TwoLink<f64>) -> Result<Vec<[f64; 2]>> {
    let spec = cfg.trajectory();
    let span = spec.path_span();
    let n = cfg.run.path_samples;
    (0..n)
        .map(|i| reference_tip(spec, kin, span * i as f64 / (n - 1) as f64))
        .collect()
}

/// Runs the closed loop and returns every tick logged so far, plus the error
/// that stopped the run early, if any.
pub fn simulate_episode(
    cfg: &ExperimentConfig,
    kind: ControllerKind,
    models: Option<&ModelSet>,
) -> (Vec<Tick>, u64, Option<Error>) {
    let mut ticks = Vec::new();
    let mut clamps = 0;
    let err = run_loop(cfg, kind, models, &mut ticks, &mut clamps).err();
    (ticks, clamps, err)
}

fn run_loop(
    cfg: &ExperimentConfig,
    kind: ControllerKind,
    models: Option<&ModelSet>,
    ticks: &mut Vec<Tick>,
    clamps: &mut u64,
) -> Result<()> {
    cfg.validate()?;
    let spec = cfg.trajectory();
    let dt = cfg.run.dt_control;
    let n_ticks = (spec.duration() / dt).round() as usize;
    if n_ticks == 0 {
        return Err(Error::Data(format!("trajectory duration {} gives no control ticks", spec.duration())));
    }
    let mut plant = Plant::new(cfg.plant.to_config::<f64>()?)?;
    let kin = TwoLink {
        l1: plant.config.links[0].length,
        l2: plant.config.links[1].length,
    };
    let sub = cfg.substeps();
    let dt_sim = cfg.run.dt_sim;

    let mut controllers = Vec::new();
    if kind == ControllerKind::Hybrid {
        let set = models.ok_or_else(|| Error::Config("the hybrid controller needs trained models".into()))?;
        for m in &set.models {
            let c = cfg.controller.hybrid(m.outputs())?;
            controllers.push(HybridController::new(c, m.outputs().len(), dt)?);
        }
    }
    let pd = [cfg.controller.pd_gains(0)?, cfg.controller.pd_gains(1)?];
    let layout = models.map(|s| s.layout()).unwrap_or(FeatureLayout::new(2, 0));

    let r0 = gen_reference(spec, &kin, 0.0)?;
    let mut state: PlantState<f64> = plant.equilibrium_state([r0[0].x1, r0[1].x1], cfg.run.preload_bar * 1e5)?;
    let window = ((cfg.controller.x3_window / dt_sim).round() as usize).max(1);
    let mut rate = RateWindow::new(window, dt_sim);
    rate.push(state.q_dot);
    let mut frames: Vec<Vec<[f64; 3]>> = Vec::new();

    for k in 0..n_ticks {
        let t = k as f64 * dt;
        let refs = gen_reference(spec, &kin, t)?;
        let x3 = rate.estimate();
        let frame: Vec<[f64; 3]> = (0..2).map(|j| [state.q[j], state.q_dot[j], x3[j]]).collect();
        frames.insert(0, frame);
        frames.truncate(layout.lags + 1);
        let h = layout.assemble(&frames)?;

        let mut tick = Tick {
            t,
            q_ref: [refs[0].x1, refs[1].x1],
            q: state.q,
            q_dot: state.q_dot,
            x3,
            tip: plant.tip_position(state.q),
            tip_ref: reference_tip(spec, &kin, t)?,
            ..Tick::default()
        };
        for j in 0..2 {
            tick.z[j] = [state.q[j] - refs[j].x1, state.q_dot[j] - refs[j].x2, x3[j] - refs[j].x3];
        }
        let e = |j: usize| (refs[j].x1 - state.q[j], refs[j].x2 - state.q_dot[j]);
        let (lo, hi) = (cfg.controller.u_min, cfg.controller.u_max);
        match kind {
            ControllerKind::Pd | ControllerKind::PdComp => {
                for j in 0..2 {
                    let (p, d) = e(j);
                    let u = if kind == ControllerKind::Pd {
                        pd_control(p, d, &pd[j])
                    } else {
                        pd_comp_control(p, d, &pd[j], &plant.config.nonlinearities[j])
                    };
                    tick.u_pd[j] = u;
                    tick.u_sat[j] = u.clamp(lo, hi);
                    tick.saturated |= tick.u_sat[j] != u;
                }
            }
            ControllerKind::Hybrid => {
                let set = models.expect("checked above");
                let mut pred = [0.0; 2];
                for (m, c) in set.models.iter().zip(controllers.iter_mut()) {
                    let r: Vec<Reference<f64>> = m.outputs().iter().map(|&j| refs[j]).collect();
                    let o = c.step(m, &h, &r)?;
                    for (i, &j) in m.outputs().iter().enumerate() {
                        tick.u_pd[j] = o.u_pd[i];
                        tick.u_inv[j] = o.u_inv[i];
                        tick.u_sat[j] = o.u[i];
                        tick.saturated |= o.u[i] != o.u_pre[i];
                        if o.warm {
                            tick.z[j] = o.laws[i].z();
                        }
                    }
                    let u: Vec<f64> = m.outputs().iter().map(|&j| tick.u_sat[j]).collect();
                    let d = m.predict_delta(&h, &u, dt)?;
                    for (i, &j) in m.outputs().iter().enumerate() {
                        pred[j] = d.x1_dot[i];
                    }
                }
                tick.predicted_dq = Some(pred);
            }
        }
        for j in 0..2 {
            tick.v[j] = lyapunov_value(tick.z[j]);
        }
        let u = tick.u_sat;
        ticks.push(tick);
        for _ in 0..sub {
            let before = plant.clamp_events();
            let next = plant.step(&state, u, dt_sim);
            *clamps += plant.clamp_events() - before;
            state = next?;
            rate.push(state.q_dot);
        }
    }
    Ok(())
}

/// Summary metrics of a completed run.
pub fn episode_metrics(
    cfg: &ExperimentConfig,
    kind: ControllerKind,
    ticks: &[Tick],
    clamp_events: u64,
) -> Result<Metrics> {
    let start = ticks
        .iter()
        .position(|t| t.q_dot.iter().any(|v| v.abs() > cfg.run.start_threshold))
        .ok_or_else(|| Error::Data("the arm never started moving".into()))?;
    let used = &ticks[start..];
    let plant = Plant::new(cfg.plant.to_config::<f64>()?)?;
    let kin = TwoLink {
        l1: plant.config.links[0].length,
        l2: plant.config.links[1].length,
    };
    let path = reference_path(cfg, &kin)?;
    let f = cfg.run.rmse_formula;
    let aligned: Vec<f64> = used
        .iter()
        .map(|t| (t.tip[0] - t.tip_ref[0]).hypot(t.tip[1] - t.tip_ref[1]))
        .collect();
    let rmse_trajectory = f.aggregate(aligned.iter().copied())?;
    // The time-aligned reference point lies on the path, so it bounds the
    // path distance from above.
    let rmse_path = f.aggregate(
        used.iter()
            .zip(&aligned)
            .map(|(t, a)| distance_to_path(t.tip, &path).min(*a)),
    )?;
    if rmse_path > rmse_trajectory {
        return Err(Error::Data(format!(
            "path error {rmse_path} exceeds trajectory error {rmse_trajectory}"
        )));
    }
    let mut max_abs_z1 = [0.0f64; 2];
    for t in used {
        for j in 0..2 {
            max_abs_z1[j] = max_abs_z1[j].max((t.q[j] - t.q_ref[j]).abs());
        }
    }
    let eta = if kind == ControllerKind::Hybrid {
        run_accuracy(ticks).ok().map(|a| [a[0].eta, a[1].eta])
    } else {
        None
    };
    Ok(Metrics {
        controller: kind,
        formula: f,
        rmse_path,
        rmse_trajectory,
        start_time: used[0].t,
        samples: used.len(),
        saturation_fraction: used.iter().filter(|t| t.saturated).count() as f64 / used.len() as f64,
        max_abs_z1,
        clamp_events,
        eta,
    })
}

/// One-step prediction accuracy of the logged model predictions.
pub fn run_accuracy(ticks: &[Tick]) -> Result<[Accuracy; 2]> {
    let mut pred = [Vec::new(), Vec::new()];
    let mut actual = [Vec::new(), Vec::new()];
    for w in ticks.windows(2) {
        if let Some(p) = w[0].predicted_dq {
            for j in 0..2 {
                pred[j].push(p[j]);
                actual[j].push(w[1].q[j] - w[0].q[j]);
            }
        }
    }
    Ok([
        prediction_accuracy(&pred[0], &actual[0], ETA_FLOOR)?,
        prediction_accuracy(&pred[1], &actual[1], ETA_FLOOR)?,
    ])
}

pub fn run_episode(cfg: &ExperimentConfig, kind: ControllerKind, models: Option<&ModelSet>) -> Result<EpisodeResult> {
    let (ticks, clamps, err) = simulate_episode(cfg, kind, models);
    if let Some(e) = err {
        return Err(e);
    }
    let metrics = episode_metrics(cfg, kind, &ticks, clamps)?;
    Ok(EpisodeResult { ticks, metrics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::TrajectorySpec;
    use crate::harness::config::TrajectorySpecSection;

    fn short(kind: ControllerKind) -> EpisodeResult {
        let mut cfg = ExperimentConfig::default();
        if let TrajectorySpec::Circle { duration, .. } = &mut cfg.trajectory.0 {
            *duration = 2.0;
        }
        run_episode(&cfg, kind, None).unwrap()
    }

    #[test]
    fn pd_tracks_and_path_error_bounded() {
        let r = short(ControllerKind::Pd);
        assert_eq!(r.ticks.len(), 100);
        assert!(r.metrics.rmse_path <= r.metrics.rmse_trajectory);
        assert!(r.metrics.rmse_trajectory < 0.5);
    }

    #[test]
    fn hybrid_without_models_is_config_error() {
        let cfg = ExperimentConfig::default();
        assert!(matches!(run_episode(&cfg, ControllerKind::Hybrid, None), Err(Error::Config(_))));
    }

    #[test]
    fn zero_duration_is_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.trajectory = TrajectorySpecSection(TrajectorySpec::Circle {
            center: [6.8, -2.12],
            radius: 1.0,
            omega: 1.0,
            duration: 0.0,
        });
        assert!(run_episode(&cfg, ControllerKind::Pd, None).is_err());
    }

    #[test]
    fn rate_window_differences() {
        let mut w = RateWindow::new(2, 0.5);
        assert_eq!(w.estimate(), [0.0, 0.0]);
        for k in 0..5 {
            w.push([k as f64, -(k as f64)]);
        }
        assert_eq!(w.estimate(), [2.0, -2.0]);
    }
}
