//! Random sinusoidal excitation for data collection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plant::NonlinearityParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExcitationRanges {
    /// Per-joint `[min, max]` sinusoid amplitude (signal units).
    pub amplitude: [[f64; 2]; 2],
    /// `[min, max]` sinusoid frequency (Hz).
    pub frequency: [f64; 2],
    /// `[min, max]` number of sinusoids per joint.
    pub components: [usize; 2],
    /// Proportional pull towards the episode's center angle (signal per rad).
    pub centering_gain: [f64; 2],
    /// Nominal joint-angle center (rad).
    pub center: [f64; 2],
    /// Episode centers are drawn uniformly within `center ± spread`.
    pub center_spread: [f64; 2],
}

impl Default for ExcitationRanges {
    fn default() -> Self {
        Self {
            amplitude: [[1.0, 14.0], [0.5, 8.0]],
            frequency: [0.05, 0.6],
            components: [1, 3],
            centering_gain: [30.0, 10.0],
            center: [0.1, -1.8],
            center_spread: [0.15, 0.35],
        }
    }
}

impl ExcitationRanges {
    pub fn validate(&self) -> Result<()> {
        let ok = |r: [f64; 2]| r[0] >= 0.0 && r[0] <= r[1] && r[1].is_finite();
        if !ok(self.amplitude[0]) || !ok(self.amplitude[1]) || !ok(self.frequency) {
            return Err(Error::Config(format!("invalid excitation ranges {self:?}")));
        }
        if self.components[0] > self.components[1] || self.components[1] == 0 {
            return Err(Error::Config(format!("invalid component range {:?}", self.components)));
        }
        if self.centering_gain.iter().chain(&self.center_spread).any(|g| !(*g >= 0.0)) {
            return Err(Error::Config("centering gains and spreads must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sinusoid {
    pub amplitude: f64,
    /// rad/s
    pub omega: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcitationSchedule {
    pub joints: [Vec<Sinusoid>; 2],
    pub center: [f64; 2],
    pub gain: [f64; 2],
}

impl ExcitationSchedule {
    /// Open-loop part of the command at `t`.
    pub fn open_loop(&self, t: f64) -> [f64; 2] {
        std::array::from_fn(|j| {
            self.joints[j]
                .iter()
                .map(|s| s.amplitude * (s.omega * t + s.phase).sin())
                .sum()
        })
    }

    /// Command at `t` given the joint angles.
    pub fn command(&self, t: f64, q: [f64; 2]) -> [f64; 2] {
        let ol = self.open_loop(t);
        std::array::from_fn(|j| ol[j] + self.gain[j] * (self.center[j] - q[j]))
    }

    /// Fractions of open-loop samples below `D_l` and above `D_r`, per joint.
    pub fn coverage(&self, nl: &[NonlinearityParams<f64>; 2], duration: f64, dt: f64) -> [[f64; 2]; 2] {
        let n = (duration / dt).round().max(1.0) as usize;
        let mut c = [[0usize; 2]; 2];
        for k in 0..n {
            let u = self.open_loop(k as f64 * dt);
            for j in 0..2 {
                if u[j] < nl[j].dead_left {
                    c[j][0] += 1;
                }
                if u[j] > nl[j].dead_right {
                    c[j][1] += 1;
                }
            }
        }
        c.map(|r| r.map(|x| x as f64 / n as f64))
    }
}

/// Draws a schedule. Deterministic per seed.
pub fn gen_excitation(seed: u64, r: &ExcitationRanges) -> Result<ExcitationSchedule> {
    r.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uniform = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| if hi > lo { rng.gen_range(lo..hi) } else { lo };
    let mut joints: [Vec<Sinusoid>; 2] = Default::default();
    for (j, list) in joints.iter_mut().enumerate() {
        let n = rng.gen_range(r.components[0].max(1)..=r.components[1]);
        for _ in 0..n {
            // Split the amplitude budget across components.
            let a = uniform(&mut rng, r.amplitude[j][0], r.amplitude[j][1]) / n as f64;
            let f = uniform(&mut rng, r.frequency[0], r.frequency[1]);
            let phase = uniform(&mut rng, 0.0, 2.0 * std::f64::consts::PI);
            list.push(Sinusoid {
                amplitude: a,
                omega: 2.0 * std::f64::consts::PI * f,
                phase,
            });
        }
    }
    let center = std::array::from_fn(|j| {
        r.center[j] + uniform(&mut rng, -r.center_spread[j], r.center_spread[j])
    });
    Ok(ExcitationSchedule {
        joints,
        center,
        gain: r.centering_gain,
    })
}
