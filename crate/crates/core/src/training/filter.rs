//! Second-order Butterworth low-pass, applied forward and backward for zero
//! phase, plus finite differences on a uniform grid.

use crate::error::{Error, Result};
use crate::Scalar;

/// Biquad coefficients, `a0` normalized to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad<T> {
    pub b: [T; 3],
    pub a: [T; 2],
    /// Reflection padding used by [`Biquad::filtfilt`], in samples.
    pub pad: usize,
}

impl<T: Scalar> Biquad<T> {
    /// Butterworth low-pass by the bilinear transform with prewarping.
    pub fn butterworth_lowpass(cutoff_hz: T, sample_hz: T) -> Result<Self> {
        let nyq = sample_hz / T::lit(2.0);
        if !(cutoff_hz > T::zero() && cutoff_hz < nyq) {
            return Err(Error::Config(format!(
                "cutoff {cutoff_hz} Hz must lie in (0, {nyq}) Hz for sampling at {sample_hz} Hz"
            )));
        }
        let k = (T::PI() * cutoff_hz / sample_hz).tan();
        let k2 = k * k;
        let r2 = T::SQRT_2();
        let norm = T::one() / (T::one() + r2 * k + k2);
        let b0 = k2 * norm;
        // Long enough for the start-up transient to decay below 1e-11.
        let pad = (8.0 * (sample_hz / cutoff_hz).as_f64()).ceil() as usize;
        Ok(Self {
            pad: pad.max(9),
            b: [b0, T::lit(2.0) * b0, b0],
            a: [T::lit(2.0) * (k2 - T::one()) * norm, (T::one() - r2 * k + k2) * norm],
        })
    }

    /// Transposed direct-form II states giving a steady-state response to a
    /// constant unit input.
    fn steady_state(&self) -> [T; 2] {
        let [_, b1, b2] = self.b;
        let [a1, a2] = self.a;
        let gain = (self.b[0] + b1 + b2) / (T::one() + a1 + a2);
        let z2 = b2 - a2 * gain;
        [b1 - a1 * gain + z2, z2]
    }

    fn run(&self, x: &[T], zi: [T; 2], out: &mut Vec<T>) {
        let [b0, b1, b2] = self.b;
        let [a1, a2] = self.a;
        let [mut z1, mut z2] = zi;
        out.clear();
        for &xi in x {
            let y = b0 * xi + z1;
            z1 = b1 * xi - a1 * y + z2;
            z2 = b2 * xi - a2 * y;
            out.push(y);
        }
    }

    /// Forward-backward filtering with odd-reflection padding and
    /// steady-state initial conditions at both ends.
    pub fn filtfilt(&self, x: &[T]) -> Result<Vec<T>> {
        let n = x.len();
        if n == 0 {
            return Err(Error::Data("cannot filter an empty signal".into()));
        }
        if n == 1 {
            return Ok(x.to_vec());
        }
        let pad = self.pad.min(n - 1);
        let two = T::lit(2.0);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        for i in (1..=pad).rev() {
            ext.push(two * x[0] - x[i]);
        }
        ext.extend_from_slice(x);
        for i in 1..=pad {
            ext.push(two * x[n - 1] - x[n - 1 - i]);
        }
        let zi = self.steady_state();
        let mut fwd = Vec::with_capacity(ext.len());
        let x0 = ext[0];
        self.run(&ext, zi.map(|z| z * x0), &mut fwd);
        fwd.reverse();
        let mut bwd = Vec::with_capacity(ext.len());
        let y0 = fwd[0];
        self.run(&fwd, zi.map(|z| z * y0), &mut bwd);
        bwd.reverse();
        Ok(bwd[pad..pad + n].to_vec())
    }

    /// Magnitude response at `f` Hz.
    pub fn gain_at(&self, f: T, sample_hz: T) -> T {
        let w = T::lit(2.0) * T::PI() * f / sample_hz;
        let (c1, s1) = (w.cos(), -w.sin());
        let (c2, s2) = ((w + w).cos(), -(w + w).sin());
        let num_re = self.b[0] + self.b[1] * c1 + self.b[2] * c2;
        let num_im = self.b[1] * s1 + self.b[2] * s2;
        let den_re = T::one() + self.a[0] * c1 + self.a[1] * c2;
        let den_im = self.a[0] * s1 + self.a[1] * s2;
        ((num_re * num_re + num_im * num_im) / (den_re * den_re + den_im * den_im)).sqrt()
    }
}

/// Derivative on a uniform grid: central differences inside, one-sided
/// second-order differences at the ends.
pub fn derivative<T: Scalar>(x: &[T], dt: T) -> Result<Vec<T>> {
    let n = x.len();
    if n < 3 {
        return Err(Error::Data(format!("need at least 3 samples to differentiate, got {n}")));
    }
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let four = T::lit(4.0);
    let mut d = vec![T::zero(); n];
    d[0] = (-three * x[0] + four * x[1] - x[2]) / (two * dt);
    for i in 1..n - 1 {
        d[i] = (x[i + 1] - x[i - 1]) / (two * dt);
    }
    d[n - 1] = (three * x[n - 1] - four * x[n - 2] + x[n - 3]) / (two * dt);
    Ok(d)
}
