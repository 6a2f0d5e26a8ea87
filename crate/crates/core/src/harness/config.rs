//! Experiment configuration file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::excitation::ExcitationRanges;
use super::metrics::RmseFormula;
use super::trajectory::TrajectorySpec;
use crate::control::{BacksteppingGains, ErrorRate, HybridConfig, InversionLimits, PdGains};
use crate::error::{Error, Result};
use crate::plant::PlantSpec;
use crate::training::{PreprocessConfig, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    Pd,
    PdComp,
    Hybrid,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 3] = [ControllerKind::Pd, ControllerKind::PdComp, ControllerKind::Hybrid];

    pub fn name(&self) -> &'static str {
        match self {
            ControllerKind::Pd => "pd",
            ControllerKind::PdComp => "pd-comp",
            ControllerKind::Hybrid => "hybrid",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ControllerKind::Pd => "PD",
            ControllerKind::PdComp => "PD with static dead-zone compensation",
            ControllerKind::Hybrid => "PD + model inversion",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "pd" => Ok(ControllerKind::Pd),
            "pd-comp" => Ok(ControllerKind::PdComp),
            "hybrid" => Ok(ControllerKind::Hybrid),
            other => Err(Error::Config(format!(
                "unknown controller {other:?} (expected pd, pd-comp or hybrid)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    /// One model per joint, or a single model predicting both.
    pub coupled: bool,
    /// Model file paths; relative paths resolve against the output directory.
    pub boom: PathBuf,
    pub arm: PathBuf,
    pub joint: PathBuf,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            coupled: false,
            boom: "model_boom.json".into(),
            arm: "model_arm.json".into(),
            joint: "model_joint.json".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerSection {
    pub kind: ControllerKind,
    /// `[k_P, k_D]` per joint.
    pub pd: [[f64; 2]; 2],
    /// `[k1, k2, k3]` per joint.
    pub backstepping: [[f64; 3]; 2],
    pub u_min: f64,
    pub u_max: f64,
    pub feature_margin: Option<f64>,
    pub command_limit: Option<[f64; 2]>,
    pub output_limit: Option<[f64; 2]>,
    pub filter_periods: f64,
    pub pd_weight: [f64; 2],
    pub inversion_weight: [f64; 2],
    pub error_rate: ErrorRate,
    /// Window of the backward difference giving the measured `q̈` (s).
    pub x3_window: f64,
}

impl Default for ControllerSection {
    fn default() -> Self {
        Self {
            kind: ControllerKind::Hybrid,
            pd: [[200.0, 0.16], [160.0, 0.2]],
            backstepping: [[2.0, 2.0, 2.0], [2.0, 2.0, 2.0]],
            u_min: -200.0,
            u_max: 200.0,
            feature_margin: Some(0.1),
            command_limit: None,
            output_limit: None,
            filter_periods: 5.0,
            pd_weight: [1.0, 1.0],
            inversion_weight: [1.0, 1.0],
            error_rate: ErrorRate::Model,
            x3_window: 0.005,
        }
    }
}

impl ControllerSection {
    pub fn pd_gains(&self, j: usize) -> Result<PdGains<f64>> {
        PdGains::new(self.pd[j][0], self.pd[j][1])
    }

    /// Hybrid settings for a model predicting `joints`.
    pub fn hybrid(&self, joints: &[usize]) -> Result<HybridConfig<f64>> {
        if joints.is_empty() {
            return Err(Error::Config("controller needs at least one joint".into()));
        }
        let pd = joints.iter().map(|&j| self.pd_gains(j)).collect::<Result<Vec<_>>>()?;
        let bs = joints
            .iter()
            .map(|&j| {
                let k = self.backstepping[j];
                BacksteppingGains::new(k[0], k[1], k[2])
            })
            .collect::<Result<Vec<_>>>()?;
        let mut c = HybridConfig::new(pd, bs);
        c.u_min = self.u_min;
        c.u_max = self.u_max;
        c.filter_periods = self.filter_periods;
        c.error_rate = self.error_rate;
        // Blend weights and limits are per joint; a coupled model uses the
        // first joint's values.
        let j0 = joints[0];
        c.pd_weight = self.pd_weight[j0];
        c.inversion_weight = self.inversion_weight[j0];
        c.limits = InversionLimits {
            feature_margin: self.feature_margin,
            command: self.command_limit.map(|l| l[j0]),
            output: self.output_limit.map(|l| l[j0]),
        };
        c.validate(joints.len())?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub dt_sim: f64,
    pub dt_control: f64,
    pub out: PathBuf,
    pub rmse_formula: RmseFormula,
    /// Tracking error is measured from the first tick with a joint speed
    /// above this (rad/s).
    pub start_threshold: f64,
    /// Pressure of the lighter-loaded chamber in the initial rest state (bar).
    pub preload_bar: f64,
    /// Number of samples of the reference path used for the path error.
    pub path_samples: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: 1,
            dt_sim: 0.001,
            dt_control: 0.02,
            out: "out".into(),
            rmse_formula: RmseFormula::Squared,
            start_threshold: 1e-3,
            preload_bar: 20.0,
            path_samples: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollectSection {
    pub episodes: usize,
    pub duration: f64,
    pub excitation: ExcitationRanges,
    /// Episodes must keep each joint this far (rad) inside its stroke range.
    pub margin: f64,
    pub max_attempts: usize,
}

impl Default for CollectSection {
    fn default() -> Self {
        Self {
            episodes: 200,
            duration: 30.0,
            excitation: ExcitationRanges::default(),
            margin: 0.05,
            max_attempts: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    /// Model substeps per sample interval when rolling the prediction
    /// forward; 1 is a single explicit Euler step.
    pub substeps: usize,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        Self { substeps: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub plant: PlantSpec,
    pub model: ModelSection,
    pub controller: ControllerSection,
    pub trajectory: TrajectorySpecSection,
    pub run: RunSection,
    pub collect: CollectSection,
    pub preprocess: PreprocessConfig,
    pub train: TrainConfig,
    pub evaluate: EvaluateSection,
}

/// Wrapper so the trajectory section can default to the tracking circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrajectorySpecSection(pub TrajectorySpec);

impl Default for TrajectorySpecSection {
    fn default() -> Self {
        Self(TrajectorySpec::default_circle())
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn trajectory(&self) -> &TrajectorySpec {
        &self.trajectory.0
    }

    /// Number of plant steps per control tick.
    pub fn substeps(&self) -> usize {
        (self.run.dt_control / self.run.dt_sim).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        self.plant.to_config::<f64>()?;
        let r = &self.run;
        if !(r.dt_sim > 0.0 && r.dt_control >= r.dt_sim) {
            return Err(Error::Config(format!(
                "need 0 < dt_sim <= dt_control, got {} and {}",
                r.dt_sim, r.dt_control
            )));
        }
        let ratio = r.dt_control / r.dt_sim;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return Err(Error::Config(format!(
                "dt_control ({}) must be an integer multiple of dt_sim ({})",
                r.dt_control, r.dt_sim
            )));
        }
        if r.path_samples < 2 {
            return Err(Error::Config("path_samples must be >= 2".into()));
        }
        self.trajectory().validate()?;
        self.collect.excitation.validate()?;
        if !(self.collect.duration > 0.0) || self.collect.max_attempts == 0 {
            return Err(Error::Config("collect duration and max_attempts must be > 0".into()));
        }
        self.preprocess.validate()?;
        self.train.validate()?;
        if self.evaluate.substeps == 0 {
            return Err(Error::Config("evaluate.substeps must be >= 1".into()));
        }
        for j in 0..2 {
            self.controller.pd_gains(j)?;
        }
        self.controller.hybrid(&[0])?;
        self.controller.hybrid(&[1])?;
        if !(self.controller.x3_window >= r.dt_sim) {
            return Err(Error::Config("x3_window must be at least dt_sim".into()));
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.run.out.join(p)
        }
    }
}
