//! The reversible model: an integrator chain with learned residuals,
//!
//! ```text
//! ẋ1 = T1(h) + x2
//! ẋ2 = T2(h) + x3
//! ẋ3 = T3(h) + b·e^{S(h)}·u,     S(h) = c·atan(S_raw(h))
//! ```
//!
//! and its exact inverse. Networks see the min-max normalized feature vector
//! and produce outputs in units of the target ranges, so `T_k = r_k·net_k`
//! and `b = r_3 / r_u`. With identity scaling `b = 1`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mlp::Mlp;
use super::normalize::MinMax;
use crate::error::{Error, Result};
use crate::Scalar;

/// Layout of the feature vector `h`: `[x1, x2, x3]` for each of `joints`
/// joints, repeated for the current sample and `lags` past samples (current
/// first).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub joints: usize,
    pub lags: usize,
}

impl FeatureLayout {
    pub fn new(joints: usize, lags: usize) -> Self {
        Self { joints, lags }
    }

    pub fn dim(&self) -> usize {
        3 * self.joints * (self.lags + 1)
    }

    /// Index of component `k` (0 = x1, 1 = x2, 2 = x3) of `joint` at `lag`.
    pub fn index(&self, lag: usize, joint: usize, k: usize) -> usize {
        (lag * self.joints + joint) * 3 + k
    }

    /// Builds `h` from frames of per-joint `[x1, x2, x3]`, current first.
    /// Missing history repeats the oldest frame given.
    pub fn assemble<T: Scalar>(&self, frames: &[Vec<[T; 3]>]) -> Result<Vec<T>> {
        if frames.is_empty() {
            return Err(Error::Data("feature assembly needs at least one frame".into()));
        }
        let mut h = vec![T::zero(); self.dim()];
        for lag in 0..=self.lags {
            let f = &frames[lag.min(frames.len() - 1)];
            if f.len() != self.joints {
                return Err(Error::dim("feature frame", self.joints, f.len()));
            }
            for (j, x) in f.iter().enumerate() {
                for k in 0..3 {
                    h[self.index(lag, j, k)] = x[k];
                }
            }
        }
        Ok(h)
    }
}

/// Target scales: the ranges `r_1, r_2, r_3` of the derivative targets and
/// `r_u` of the input, one entry per modeled joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetScales<T> {
    pub x1_dot: Vec<T>,
    pub x2_dot: Vec<T>,
    pub x3_dot: Vec<T>,
    pub u: Vec<T>,
}

impl<T: Scalar> TargetScales<T> {
    pub fn unit(n: usize) -> Self {
        Self {
            x1_dot: vec![T::one(); n],
            x2_dot: vec![T::one(); n],
            x3_dot: vec![T::one(); n],
            u: vec![T::one(); n],
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        for v in [&self.x1_dot, &self.x2_dot, &self.x3_dot, &self.u] {
            if v.len() != n {
                return Err(Error::dim("target scales", n, v.len()));
            }
            if let Some(bad) = v.iter().find(|r| !(r.is_finite() && **r > T::zero())) {
                return Err(Error::Config(format!("target scale must be finite and > 0, got {bad}")));
            }
        }
        Ok(())
    }

    fn map<U: Scalar>(&self) -> TargetScales<U> {
        let c = |v: &Vec<T>| v.iter().map(|x| U::lit(x.as_f64())).collect();
        TargetScales {
            x1_dot: c(&self.x1_dot),
            x2_dot: c(&self.x2_dot),
            x3_dot: c(&self.x3_dot),
            u: c(&self.u),
        }
    }
}

/// `(ẋ1, ẋ2, ẋ3)`, one entry per modeled joint.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives<T> {
    pub x1_dot: Vec<T>,
    pub x2_dot: Vec<T>,
    pub x3_dot: Vec<T>,
}

/// Result of the inverse model.
#[derive(Debug, Clone, PartialEq)]
pub struct Inversion<T> {
    pub x2: Vec<T>,
    pub x3: Vec<T>,
    pub u: Vec<T>,
}

/// Network outputs at one feature vector, in physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct NetOutputs<T> {
    pub t1: Vec<T>,
    pub t2: Vec<T>,
    pub t3: Vec<T>,
    pub s: Vec<T>,
}

impl<T: Scalar> NetOutputs<T> {
    pub fn is_finite(&self) -> bool {
        [&self.t1, &self.t2, &self.t3, &self.s]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RevnmModel<T> {
    layout: FeatureLayout,
    outputs: Vec<usize>,
    clamp: T,
    features: MinMax<T>,
    scales: TargetScales<T>,
    nets: [Mlp<T>; 4],
}

/// Index of each network in [`RevnmModel::nets`].
pub const T1: usize = 0;
pub const T2: usize = 1;
pub const T3: usize = 2;
pub const S: usize = 3;
pub const NET_NAMES: [&str; 4] = ["t1", "t2", "t3", "s_raw"];

impl<T: Scalar> RevnmModel<T> {
    /// `outputs` lists which joints of the feature layout the model predicts.
    pub fn new(
        layout: FeatureLayout,
        outputs: Vec<usize>,
        clamp: T,
        features: MinMax<T>,
        scales: TargetScales<T>,
        nets: [Mlp<T>; 4],
    ) -> Result<Self> {
        if outputs.is_empty() || outputs.iter().any(|&j| j >= layout.joints) {
            return Err(Error::Config(format!(
                "output joints {outputs:?} not within the {} joints of the feature layout",
                layout.joints
            )));
        }
        if !(clamp.is_finite() && clamp > T::zero()) {
            return Err(Error::Config(format!("clamp constant must be > 0, got {clamp}")));
        }
        if features.dim() != layout.dim() {
            return Err(Error::dim("feature normalizer", layout.dim(), features.dim()));
        }
        scales.validate(outputs.len())?;
        for net in &nets {
            if net.input_dim() != layout.dim() {
                return Err(Error::dim("network input", layout.dim(), net.input_dim()));
            }
            if net.output_dim() != outputs.len() {
                return Err(Error::dim("network output", outputs.len(), net.output_dim()));
            }
        }
        Ok(Self {
            layout,
            outputs,
            clamp,
            features,
            scales,
            nets,
        })
    }

    /// All four networks identically zero with unit scaling: the pure
    /// integrator chain.
    pub fn zero(layout: FeatureLayout, outputs: Vec<usize>, hidden: usize) -> Result<Self> {
        let sizes = [layout.dim(), hidden, hidden, outputs.len()];
        let n = outputs.len();
        Self::new(
            layout,
            outputs,
            T::lit(2.0),
            MinMax::identity(layout.dim()),
            TargetScales::unit(n),
            std::array::from_fn(|_| Mlp::zeros(sizes)),
        )
    }

    /// Random hidden layers with zero output layers, so the untrained model
    /// is the integrator chain.
    pub fn init<R: Rng>(
        layout: FeatureLayout,
        outputs: Vec<usize>,
        hidden: usize,
        clamp: T,
        rng: &mut R,
    ) -> Result<Self> {
        let sizes = [layout.dim(), hidden, hidden, outputs.len()];
        let n = outputs.len();
        let nets = std::array::from_fn(|_| Mlp::init(sizes, true, rng));
        Self::new(
            layout,
            outputs,
            clamp,
            MinMax::identity(layout.dim()),
            TargetScales::unit(n),
            nets,
        )
    }

    pub fn layout(&self) -> FeatureLayout {
        self.layout
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    pub fn clamp(&self) -> T {
        self.clamp
    }

    pub fn features(&self) -> &MinMax<T> {
        &self.features
    }

    pub fn scales(&self) -> &TargetScales<T> {
        &self.scales
    }

    pub fn nets(&self) -> &[Mlp<T>; 4] {
        &self.nets
    }

    pub fn nets_mut(&mut self) -> &mut [Mlp<T>; 4] {
        &mut self.nets
    }

    pub fn with_normalization(mut self, features: MinMax<T>, scales: TargetScales<T>) -> Result<Self> {
        if features.dim() != self.layout.dim() {
            return Err(Error::dim("feature normalizer", self.layout.dim(), features.dim()));
        }
        scales.validate(self.outputs.len())?;
        self.features = features;
        self.scales = scales;
        Ok(self)
    }

    /// Input gain constant `b_i = r_3 / r_u` for output `i`.
    pub fn gain_constant(&self, i: usize) -> T {
        self.scales.x3_dot[i] / self.scales.u[i]
    }

    /// Current `(x1, x2, x3)` of output `i`, read from `h`.
    pub fn state_of(&self, h: &[T], i: usize) -> [T; 3] {
        let j = self.outputs[i];
        [
            h[self.layout.index(0, j, 0)],
            h[self.layout.index(0, j, 1)],
            h[self.layout.index(0, j, 2)],
        ]
    }

    fn check_h(&self, h: &[T]) -> Result<()> {
        if h.len() != self.layout.dim() {
            return Err(Error::dim("feature vector", self.layout.dim(), h.len()));
        }
        Ok(())
    }

    fn check_n(&self, v: &[T], context: &'static str) -> Result<()> {
        if v.len() != self.outputs.len() {
            return Err(Error::dim(context, self.outputs.len(), v.len()));
        }
        Ok(())
    }

    /// `c·atan(raw)`.
    pub fn soft_clamp(&self, raw: T) -> T {
        self.clamp * raw.atan()
    }

    /// Evaluates `T1, T2, T3` (physical units) and `S` at raw features `h`.
    pub fn eval_nets(&self, h: &[T]) -> Result<NetOutputs<T>> {
        self.check_h(h)?;
        let hn = self.features.normalize(h)?;
        let sc = &self.scales;
        let scale = |v: Vec<T>, r: &[T]| v.into_iter().zip(r).map(|(a, r)| a * *r).collect();
        Ok(NetOutputs {
            t1: scale(self.nets[T1].eval(&hn)?, &sc.x1_dot),
            t2: scale(self.nets[T2].eval(&hn)?, &sc.x2_dot),
            t3: scale(self.nets[T3].eval(&hn)?, &sc.x3_dot),
            s: self.nets[S].eval(&hn)?.into_iter().map(|r| self.soft_clamp(r)).collect(),
        })
    }

    /// Copy of `h` with each non-degenerate dimension clamped to the
    /// normalizer range widened by `margin` ranges on both sides.
    pub fn clamp_features(&self, h: &[T], margin: T) -> Result<Vec<T>> {
        self.check_h(h)?;
        let f = &self.features;
        Ok(h.iter()
            .enumerate()
            .map(|(k, &v)| {
                if f.degenerate[k] {
                    v
                } else {
                    let r = f.range(k) * margin;
                    v.max(f.min[k] - r).min(f.max[k] + r)
                }
            })
            .collect())
    }

    pub fn s_eval(&self, h: &[T]) -> Result<Vec<T>> {
        Ok(self.eval_nets(h)?.s)
    }

    /// Forward equations given precomputed network outputs.
    pub fn forward_with(&self, n: &NetOutputs<T>, h: &[T], u: &[T]) -> Result<Derivatives<T>> {
        self.check_h(h)?;
        self.check_n(u, "input u")?;
        let k = self.outputs.len();
        let mut d = Derivatives {
            x1_dot: vec![T::zero(); k],
            x2_dot: vec![T::zero(); k],
            x3_dot: vec![T::zero(); k],
        };
        for i in 0..k {
            let [_, x2, x3] = self.state_of(h, i);
            d.x1_dot[i] = n.t1[i] + x2;
            d.x2_dot[i] = n.t2[i] + x3;
            d.x3_dot[i] = n.t3[i] + self.gain_constant(i) * n.s[i].exp() * u[i];
        }
        Ok(d)
    }

    pub fn forward(&self, h: &[T], u: &[T]) -> Result<Derivatives<T>> {
        let n = self.eval_nets(h)?;
        self.forward_with(&n, h, u)
    }

    /// Inverse equations given precomputed network outputs.
    pub fn inverse_with(&self, n: &NetOutputs<T>, d: &Derivatives<T>) -> Result<Inversion<T>> {
        self.check_n(&d.x1_dot, "x1_dot")?;
        self.check_n(&d.x2_dot, "x2_dot")?;
        self.check_n(&d.x3_dot, "x3_dot")?;
        let k = self.outputs.len();
        let mut r = Inversion {
            x2: vec![T::zero(); k],
            x3: vec![T::zero(); k],
            u: vec![T::zero(); k],
        };
        for i in 0..k {
            r.x2[i] = d.x1_dot[i] - n.t1[i];
            r.x3[i] = d.x2_dot[i] - n.t2[i];
            r.u[i] = (-n.s[i]).exp() * (d.x3_dot[i] - n.t3[i]) / self.gain_constant(i);
        }
        Ok(r)
    }

    pub fn inverse(&self, h: &[T], d: &Derivatives<T>) -> Result<Inversion<T>> {
        let n = self.eval_nets(h)?;
        self.inverse_with(&n, d)
    }

    /// Explicit-Euler one-step prediction `Δx̂ = ẋ·Δt`.
    pub fn predict_delta(&self, h: &[T], u: &[T], dt: T) -> Result<Derivatives<T>> {
        if !(dt >= T::zero()) {
            return Err(Error::Config(format!("prediction step must be >= 0, got {dt}")));
        }
        let mut d = self.forward(h, u)?;
        for v in [&mut d.x1_dot, &mut d.x2_dot, &mut d.x3_dot] {
            for x in v.iter_mut() {
                *x *= dt;
            }
        }
        Ok(d)
    }

    pub fn map<U: Scalar>(&self) -> RevnmModel<U> {
        RevnmModel {
            layout: self.layout,
            outputs: self.outputs.clone(),
            clamp: U::lit(self.clamp.as_f64()),
            features: self.features.map(),
            scales: self.scales.map(),
            nets: std::array::from_fn(|i| self.nets[i].map()),
        }
    }
}
