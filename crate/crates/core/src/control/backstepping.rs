//! Backstepping model-inversion control on the learned integrator chain.
//!
//! Error coordinates, per joint:
//!
//! ```text
//! z1 = x1 − x1ref
//! α2 = x2ref − T1 − k1·z1                 z2 = x2 − α2
//! α3 = x3ref − T2 − Ṫ1 − z1 − k1·ż1 − k2·z2   z3 = x3 − α3
//! ```
//!
//! and the control law in collapsed form
//!
//! ```text
//! e^S·b·u = ẋ3ref − T3 − Ṫ2 − T̈1 − R1·z1 − R2·ż1 − R3·z̈1
//! ```
//!
//! The time derivatives of the network outputs are estimated from backward
//! differences over the control period, smoothed by a first-order low-pass.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::revnm::{NetOutputs, RevnmModel};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BacksteppingGains<T> {
    pub k1: T,
    pub k2: T,
    pub k3: T,
}

impl<T: Scalar> BacksteppingGains<T> {
    pub fn new(k1: T, k2: T, k3: T) -> Result<Self> {
        let g = Self { k1, k2, k3 };
        g.validate()?;
        Ok(g)
    }

    pub fn uniform(k: T) -> Self {
        Self { k1: k, k2: k, k3: k }
    }

    /// Each gain must exceed ½.
    pub fn validate(&self) -> Result<()> {
        let half = T::lit(0.5);
        if !(self.k1 > half && self.k2 > half && self.k3 > half)
            || !(self.k1.is_finite() && self.k2.is_finite() && self.k3.is_finite())
        {
            return Err(Error::Config(format!("backstepping gains must exceed 0.5, got {self:?}")));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [T; 3] {
        [self.k1, self.k2, self.k3]
    }
}

/// `(R1, R2, R3)` of the collapsed law.
pub fn gain_polynomials<T: Scalar>(k1: T, k2: T, k3: T) -> (T, T, T) {
    let two = T::lit(2.0);
    (
        k1 * k2 * k3 + k1 + k3,
        k1 * k2 + k1 * k3 + k2 * k3 + two,
        k1 + k2 + k3,
    )
}

/// Reference `x1ref, x2ref, x3ref, ẋ3ref` for one joint.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Reference<T> {
    pub x1: T,
    pub x2: T,
    pub x3: T,
    pub x3_dot: T,
}

/// How `ż1` is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorRate {
    /// `ż1 = T1 + x2 − x2ref` and `z̈1 = T2 + x3 + Ṫ1 − x3ref`.
    #[default]
    Model,
    /// `ż1 = x2 − x2ref` and `z̈1 = x3 − x3ref` from the measured state.
    Measured,
}

/// Network-output derivative estimates for one joint.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RateEstimates<T> {
    pub t1_dot: T,
    pub t2_dot: T,
    pub t1_ddot: T,
}

/// Virtual laws and error coordinates for one joint.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VirtualLaws<T> {
    pub alpha2: T,
    pub alpha3: T,
    pub z1: T,
    pub z2: T,
    pub z3: T,
    pub z1_dot: T,
    pub z1_ddot: T,
}

impl<T: Scalar> VirtualLaws<T> {
    pub fn z(&self) -> [T; 3] {
        [self.z1, self.z2, self.z3]
    }
}

/// Error coordinates from the state `x`, network outputs `t1, t2` and the
/// estimate of `Ṫ1`.
pub fn virtual_laws<T: Scalar>(
    x: [T; 3],
    t1: T,
    t2: T,
    t1_dot: T,
    r: &Reference<T>,
    g: &BacksteppingGains<T>,
    mode: ErrorRate,
) -> VirtualLaws<T> {
    let [x1, x2, x3] = x;
    let z1 = x1 - r.x1;
    match mode {
        ErrorRate::Model => {
            let z1_dot = t1 + x2 - r.x2;
            let z1_ddot = t2 + x3 + t1_dot - r.x3;
            let alpha2 = r.x2 - t1 - g.k1 * z1;
            let z2 = x2 - alpha2;
            let alpha3 = r.x3 - t2 - t1_dot - z1 - g.k1 * z1_dot - g.k2 * z2;
            let z3 = x3 - alpha3;
            VirtualLaws {
                alpha2,
                alpha3,
                z1,
                z2,
                z3,
                z1_dot,
                z1_ddot,
            }
        }
        ErrorRate::Measured => {
            let z1_dot = x2 - r.x2;
            let z1_ddot = x3 - r.x3;
            let z2 = z1_dot + g.k1 * z1;
            let z3 = z1_ddot + z1 + g.k1 * z1_dot + g.k2 * z2;
            VirtualLaws {
                alpha2: x2 - z2,
                alpha3: x3 - z3,
                z1,
                z2,
                z3,
                z1_dot,
                z1_ddot,
            }
        }
    }
}

/// The collapsed right-hand side `ẋ3ref − T3 − Ṫ2 − T̈1 − R1·z1 − R2·ż1 − R3·z̈1`.
pub fn collapsed_command<T: Scalar>(
    laws: &VirtualLaws<T>,
    t3: T,
    rates: &RateEstimates<T>,
    r: &Reference<T>,
    g: &BacksteppingGains<T>,
) -> T {
    let (r1, r2, r3) = gain_polynomials(g.k1, g.k2, g.k3);
    r.x3_dot - t3 - rates.t2_dot - rates.t1_ddot - r1 * laws.z1 - r2 * laws.z1_dot - r3 * laws.z1_ddot
}

/// The same command built step by step from the virtual laws:
/// `ẋ3ref − T3 − Ṫ2 − T̈1 − ż1 − k1·z̈1 − k2·ż2 − z2 − k3·z3`.
pub fn stepwise_command<T: Scalar>(
    laws: &VirtualLaws<T>,
    t3: T,
    rates: &RateEstimates<T>,
    r: &Reference<T>,
    g: &BacksteppingGains<T>,
) -> T {
    let z2_dot = laws.z1_ddot + g.k1 * laws.z1_dot;
    r.x3_dot - t3 - rates.t2_dot - rates.t1_ddot - laws.z1_dot - g.k1 * laws.z1_ddot - g.k2 * z2_dot
        - laws.z2
        - g.k3 * laws.z3
}

/// History needed by the backward differences, per joint.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointMemory<T> {
    t1: [T; 2],
    t2: T,
    pub rates: RateEstimates<T>,
}

/// Controller memory. Starts cold; warm once second differences exist.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerMemory<T> {
    pub joints: Vec<JointMemory<T>>,
    pub ticks: u64,
}

/// Ticks during which the inversion path is inactive.
pub const COLD_TICKS: u64 = 2;

impl<T: Scalar> ControllerMemory<T> {
    pub fn cold(n: usize) -> Self {
        Self {
            joints: vec![JointMemory::default(); n],
            ticks: 0,
        }
    }

    /// Whether the current tick's estimates use full history.
    pub fn is_warm(&self) -> bool {
        self.ticks > COLD_TICKS
    }

    /// Pushes this tick's `T1`, `T2` and refreshes the rate estimates.
    /// `alpha` is the low-pass coefficient `dt / (τ + dt)`.
    pub fn update(&self, t1: &[T], t2: &[T], dt: T, alpha: T) -> Self {
        let mut next = self.clone();
        let k = self.ticks;
        for (i, jm) in next.joints.iter_mut().enumerate() {
            let prev = self.joints[i];
            let lp = |y: T, x: T, first: bool| if first { x } else { y + alpha * (x - y) };
            if k >= 1 {
                let d1 = (t1[i] - prev.t1[0]) / dt;
                let d2 = (t2[i] - prev.t2) / dt;
                jm.rates.t1_dot = lp(prev.rates.t1_dot, d1, k == 1);
                jm.rates.t2_dot = lp(prev.rates.t2_dot, d2, k == 1);
            }
            if k >= 2 {
                let dd = (t1[i] - T::lit(2.0) * prev.t1[0] + prev.t1[1]) / (dt * dt);
                jm.rates.t1_ddot = lp(prev.rates.t1_ddot, dd, k == 2);
            }
            jm.t1 = [t1[i], prev.t1[0]];
            jm.t2 = t2[i];
        }
        next.ticks = k + 1;
        next
    }
}

/// Output of one inversion tick.
#[derive(Debug, Clone, PartialEq)]
pub struct InversionOutput<T> {
    /// Command per joint; zero while the memory is cold.
    pub u: Vec<T>,
    /// Right-hand side before division by `b·e^S`.
    pub command: Vec<T>,
    pub laws: Vec<VirtualLaws<T>>,
    pub nets: NetOutputs<T>,
    pub warm: bool,
}

/// Limits on the inversion path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionLimits<T> {
    /// Network inputs are clamped to the training range widened by this
    /// fraction of the range on each side.
    pub feature_margin: Option<T>,
    /// Bound on the magnitude of the collapsed right-hand side.
    pub command: Option<T>,
    /// Bound on the magnitude of the inversion output.
    pub output: Option<T>,
}

impl<T: Scalar> Default for InversionLimits<T> {
    fn default() -> Self {
        Self {
            feature_margin: None,
            command: None,
            output: None,
        }
    }
}

fn limit<T: Scalar>(x: T, bound: Option<T>) -> T {
    match bound {
        Some(b) => x.max(-b).min(b),
        None => x,
    }
}

/// One tick of the model-inversion controller for every joint the model
/// predicts. `h` is the measured feature vector.
#[allow(clippy::too_many_arguments)]
pub fn inversion_control<T: Scalar>(
    m: &RevnmModel<T>,
    h: &[T],
    refs: &[Reference<T>],
    gains: &[BacksteppingGains<T>],
    mode: ErrorRate,
    limits: &InversionLimits<T>,
    mem: &ControllerMemory<T>,
    dt: T,
    filter_tau: T,
) -> Result<(InversionOutput<T>, ControllerMemory<T>)> {
    let n = m.outputs().len();
    if refs.len() != n {
        return Err(Error::dim("references", n, refs.len()));
    }
    if gains.len() != n {
        return Err(Error::dim("backstepping gains", n, gains.len()));
    }
    if mem.joints.len() != n {
        return Err(Error::dim("controller memory", n, mem.joints.len()));
    }
    if !(dt > T::zero()) {
        return Err(Error::Config(format!("control period must be > 0, got {dt}")));
    }
    let nets = match limits.feature_margin {
        Some(margin) => m.eval_nets(&m.clamp_features(h, margin)?)?,
        None => m.eval_nets(h)?,
    };
    if !nets.is_finite() {
        return Err(Error::NonFinite(format!("network outputs {nets:?} at h = {h:?}")));
    }
    let alpha = dt / (filter_tau + dt);
    let next = mem.update(&nets.t1, &nets.t2, dt, alpha);
    let warm = next.is_warm();
    let mut out = InversionOutput {
        u: vec![T::zero(); n],
        command: vec![T::zero(); n],
        laws: Vec::with_capacity(n),
        nets: nets.clone(),
        warm,
    };
    for i in 0..n {
        let rates = next.joints[i].rates;
        let laws = virtual_laws(
            m.state_of(h, i),
            nets.t1[i],
            nets.t2[i],
            rates.t1_dot,
            &refs[i],
            &gains[i],
            mode,
        );
        let cmd = limit(collapsed_command(&laws, nets.t3[i], &rates, &refs[i], &gains[i]), limits.command);
        out.command[i] = cmd;
        if warm {
            let u = (-nets.s[i]).exp() * cmd / m.gain_constant(i);
            out.u[i] = limit(u, limits.output);
        }
        out.laws.push(laws);
    }
    Ok((out, next))
}
