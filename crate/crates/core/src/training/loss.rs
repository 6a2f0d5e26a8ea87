//! Bidirectional loss and its exact gradient.
//!
//! In normalized units (`r_k` target ranges, `ũ = u / r_u`, `a_k` raw
//! network outputs, `G = e^S`) the per-joint residuals are
//!
//! ```text
//! e1 = a1 + (x2 − ẋ1)/r1
//! e2 = a2 + (x3 − ẋ2)/r2
//! e3 = a3 + G·ũ − ẋ3/r3
//! ```
//!
//! `LossY` is the mean of `e1² + e2² + e3²` over joints, samples and the
//! three equations. The inverse map gives `ũ_rec − ũ = −e3/G`,
//! `x2_rec − x2 = −r1·e1` and `x3_rec − x3 = −r2·e2`, so `LossX` is the mean
//! of `w·e3²/G² + κ·(e1² + e2²)` with `w` reduced for samples whose input
//! lies in the dead band.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::Sample;
use crate::error::{Error, Result};
use crate::revnm::{MlpTape, RevnmModel, S, T1, T2, T3};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    pub lambda_y: f64,
    pub lambda_x: f64,
    /// Weight of the state-reconstruction terms in `LossX`.
    pub kappa: f64,
    /// Inputs with `|u|` below this count as dead-band samples.
    pub dead_band: f64,
    /// `LossX` weight of dead-band samples.
    pub dead_band_weight: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            lambda_y: 1.0,
            lambda_x: 1.0,
            kappa: 0.5,
            dead_band: 0.2,
            dead_band_weight: 0.1,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        let all = [self.lambda_y, self.lambda_x, self.kappa, self.dead_band, self.dead_band_weight];
        if all.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config(format!("loss weights must be finite and >= 0: {self:?}")));
        }
        if self.lambda_x + self.lambda_y == 0.0 {
            return Err(Error::Config("lambda_x and lambda_y cannot both be zero".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Losses<T> {
    pub loss_y: T,
    pub loss_x: T,
}

impl<T: Scalar> Losses<T> {
    pub fn total(&self, cfg: &LossConfig) -> T {
        T::lit(cfg.lambda_y) * self.loss_y + T::lit(cfg.lambda_x) * self.loss_x
    }
}

/// Gradient of the weighted total with respect to each network's parameters,
/// in `[T1, T2, T3, S]` order.
pub type Gradients<T> = [Vec<T>; 4];

pub fn zero_gradients<T: Scalar>(m: &RevnmModel<T>) -> Gradients<T> {
    std::array::from_fn(|k| vec![T::zero(); m.nets()[k].params().len()])
}

struct Forward<T> {
    hn: Vec<T>,
    out: [Vec<T>; 4],
    tapes: Vec<MlpTape<T>>,
}

fn run_nets<T: Scalar>(m: &RevnmModel<T>, h: &[T]) -> Result<Forward<T>> {
    let hn = m.features().normalize(h)?;
    let n = m.outputs().len();
    let mut out: [Vec<T>; 4] = std::array::from_fn(|_| vec![T::zero(); n]);
    let mut tapes = Vec::with_capacity(4);
    for (k, net) in m.nets().iter().enumerate() {
        tapes.push(net.eval_taped(&hn, &mut out[k])?);
    }
    Ok(Forward { hn, out, tapes })
}

/// Per-sample residuals and gradient factors for one output.
struct Terms<T> {
    ly: T,
    lx: T,
    d_a: [T; 3],
    d_sraw: T,
}

fn terms<T: Scalar>(
    m: &RevnmModel<T>,
    s: &Sample<T>,
    a: [T; 3],
    s_raw: T,
    i: usize,
    cfg: &LossConfig,
    scale: T,
) -> Terms<T> {
    let j = m.outputs()[i];
    let sc = m.scales();
    let [_, x2, x3] = m.state_of(&s.h, i);
    let [y1, y2, y3] = s.target[j];
    let c = m.clamp();
    let sv = c * s_raw.atan();
    let g = sv.exp();
    let u_n = s.u[j] / sc.u[i];
    let e1 = a[0] + (x2 - y1) / sc.x1_dot[i];
    let e2 = a[1] + (x3 - y2) / sc.x2_dot[i];
    let e3 = a[2] + g * u_n - y3 / sc.x3_dot[i];
    let w = if s.u[j].abs() < T::lit(cfg.dead_band) {
        T::lit(cfg.dead_band_weight)
    } else {
        T::one()
    };
    let kappa = T::lit(cfg.kappa);
    let g2inv = T::one() / (g * g);
    let three = T::lit(3.0);
    let two = T::lit(2.0);
    let ly = (e1 * e1 + e2 * e2 + e3 * e3) / three;
    let lx = w * g2inv * e3 * e3 + kappa * (e1 * e1 + e2 * e2);
    let (wy, wx) = (T::lit(cfg.lambda_y) * scale, T::lit(cfg.lambda_x) * scale);
    let d_a = [
        wy * two * e1 / three + wx * two * kappa * e1,
        wy * two * e2 / three + wx * two * kappa * e2,
        wy * two * e3 / three + wx * two * w * g2inv * e3,
    ];
    let d_s = wy * two * e3 * g * u_n / three + wx * two * w * g2inv * e3 * (g * u_n - e3);
    let d_sraw = d_s * c / (T::one() + s_raw * s_raw);
    Terms {
        ly,
        lx,
        d_a,
        d_sraw,
    }
}

/// Losses over `batch` without gradients.
pub fn losses<T: Scalar>(m: &RevnmModel<T>, batch: &[&Sample<T>], cfg: &LossConfig) -> Result<Losses<T>> {
    if batch.is_empty() {
        return Err(Error::Data("empty batch".into()));
    }
    let n = m.outputs().len();
    let mut acc = Losses {
        loss_y: T::zero(),
        loss_x: T::zero(),
    };
    for s in batch {
        let f = run_nets(m, &s.h)?;
        for i in 0..n {
            let t = terms(m, s, [f.out[T1][i], f.out[T2][i], f.out[T3][i]], f.out[S][i], i, cfg, T::one());
            acc.loss_y += t.ly;
            acc.loss_x += t.lx;
        }
    }
    let denom = T::lit((batch.len() * n) as f64);
    acc.loss_y /= denom;
    acc.loss_x /= denom;
    Ok(acc)
}

fn chunk_grad<T: Scalar>(
    m: &RevnmModel<T>,
    chunk: &[&Sample<T>],
    cfg: &LossConfig,
    scale: T,
) -> Result<(Losses<T>, Gradients<T>)> {
    let n = m.outputs().len();
    let mut g = zero_gradients(m);
    let mut l = Losses {
        loss_y: T::zero(),
        loss_x: T::zero(),
    };
    let mut d_out: [Vec<T>; 4] = std::array::from_fn(|_| vec![T::zero(); n]);
    for s in chunk {
        let f = run_nets(m, &s.h)?;
        for i in 0..n {
            let t = terms(m, s, [f.out[T1][i], f.out[T2][i], f.out[T3][i]], f.out[S][i], i, cfg, scale);
            l.loss_y += t.ly;
            l.loss_x += t.lx;
            d_out[T1][i] = t.d_a[0];
            d_out[T2][i] = t.d_a[1];
            d_out[T3][i] = t.d_a[2];
            d_out[S][i] = t.d_sraw;
        }
        for k in 0..4 {
            m.nets()[k].backward(&f.hn, &f.tapes[k], &d_out[k], &mut g[k]);
        }
    }
    Ok((l, g))
}

/// Samples per parallel work unit. Fixed so results do not depend on the
/// thread count.
pub const CHUNK: usize = 32;

/// Losses and the exact gradient of `λ_Y·LossY + λ_X·LossX` over `batch`.
///
/// Chunks are evaluated in parallel and reduced in chunk order, so the
/// result is bit-identical regardless of scheduling.
pub fn loss_and_gradient<T: Scalar>(
    m: &RevnmModel<T>,
    batch: &[&Sample<T>],
    cfg: &LossConfig,
) -> Result<(Losses<T>, Gradients<T>)> {
    if batch.is_empty() {
        return Err(Error::Data("empty batch".into()));
    }
    let denom = T::lit((batch.len() * m.outputs().len()) as f64);
    let scale = T::one() / denom;
    let parts: Vec<Result<(Losses<T>, Gradients<T>)>> = batch
        .par_chunks(CHUNK)
        .map(|c| chunk_grad(m, c, cfg, scale))
        .collect();
    let mut g = zero_gradients(m);
    let mut l = Losses {
        loss_y: T::zero(),
        loss_x: T::zero(),
    };
    for p in parts {
        let (pl, pg) = p?;
        l.loss_y += pl.loss_y;
        l.loss_x += pl.loss_x;
        for k in 0..4 {
            for (a, b) in g[k].iter_mut().zip(&pg[k]) {
                *a += *b;
            }
        }
    }
    l.loss_y /= denom;
    l.loss_x /= denom;
    Ok((l, g))
}
