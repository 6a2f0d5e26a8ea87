//! Fully connected network with two rectified hidden layers and a linear
//! output, stored as one flat parameter vector.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Scalar;

/// Layer widths `[input, hidden1, hidden2, output]`.
pub type Sizes = [usize; 4];

/// Parameter layout is `W1 b1 W2 b2 W3 b3`, each `W` row-major with one row
/// per output unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp<T> {
    sizes: Sizes,
    params: Vec<T>,
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct MlpTape<T> {
    pub h1: Vec<T>,
    pub h2: Vec<T>,
}

pub fn param_count(s: Sizes) -> usize {
    s[1] * s[0] + s[1] + s[2] * s[1] + s[2] + s[3] * s[2] + s[3]
}

#[derive(Clone, Copy)]
struct Offsets {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    w3: usize,
    b3: usize,
}

fn offsets(s: Sizes) -> Offsets {
    let w1 = 0;
    let b1 = w1 + s[1] * s[0];
    let w2 = b1 + s[1];
    let b2 = w2 + s[2] * s[1];
    let w3 = b2 + s[2];
    let b3 = w3 + s[3] * s[2];
    Offsets {
        w1,
        b1,
        w2,
        b2,
        w3,
        b3,
    }
}

fn affine<T: Scalar>(w: &[T], b: &[T], x: &[T], out: &mut [T]) {
    let n_in = x.len();
    for (i, o) in out.iter_mut().enumerate() {
        let row = &w[i * n_in..(i + 1) * n_in];
        let mut acc = b[i];
        for (wi, xi) in row.iter().zip(x) {
            acc += *wi * *xi;
        }
        *o = acc;
    }
}

fn relu<T: Scalar>(v: &mut [T]) {
    for x in v {
        if *x < T::zero() {
            *x = T::zero();
        }
    }
}

impl<T: Scalar> Mlp<T> {
    pub fn zeros(sizes: Sizes) -> Self {
        Self {
            sizes,
            params: vec![T::zero(); param_count(sizes)],
        }
    }

    pub fn from_params(sizes: Sizes, params: Vec<T>) -> Result<Self> {
        if sizes.contains(&0) {
            return Err(Error::Config(format!("layer sizes must be positive, got {sizes:?}")));
        }
        if params.len() != param_count(sizes) {
            return Err(Error::dim("mlp parameters", param_count(sizes), params.len()));
        }
        if let Some(bad) = params.iter().find(|p| !p.is_finite()) {
            return Err(Error::NonFinite(format!("mlp parameter {bad}")));
        }
        Ok(Self { sizes, params })
    }

    /// Glorot-uniform weights, zero biases. With `zero_output` the last layer
    /// starts at zero so the network is identically zero.
    pub fn init<R: Rng>(sizes: Sizes, zero_output: bool, rng: &mut R) -> Self {
        let mut net = Self::zeros(sizes);
        let o = offsets(sizes);
        let mut fill = |start: usize, fan_in: usize, fan_out: usize, params: &mut [T]| {
            let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut params[start..start + fan_in * fan_out] {
                *p = T::lit(rng.gen_range(-a..a));
            }
        };
        fill(o.w1, sizes[0], sizes[1], &mut net.params);
        fill(o.w2, sizes[1], sizes[2], &mut net.params);
        if !zero_output {
            fill(o.w3, sizes[2], sizes[3], &mut net.params);
        }
        net
    }

    pub fn sizes(&self) -> Sizes {
        self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        self.sizes[3]
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn eval(&self, x: &[T]) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.sizes[3]];
        self.eval_taped(x, &mut out)?;
        Ok(out)
    }

    /// Forward pass writing the output into `out` and returning the hidden
    /// activations.
    pub fn eval_taped(&self, x: &[T], out: &mut [T]) -> Result<MlpTape<T>> {
        let s = self.sizes;
        if x.len() != s[0] {
            return Err(Error::dim("mlp input", s[0], x.len()));
        }
        if out.len() != s[3] {
            return Err(Error::dim("mlp output", s[3], out.len()));
        }
        let o = offsets(s);
        let p = &self.params;
        let mut h1 = vec![T::zero(); s[1]];
        affine(&p[o.w1..o.b1], &p[o.b1..o.w2], x, &mut h1);
        relu(&mut h1);
        let mut h2 = vec![T::zero(); s[2]];
        affine(&p[o.w2..o.b2], &p[o.b2..o.w3], &h1, &mut h2);
        relu(&mut h2);
        affine(&p[o.w3..o.b3], &p[o.b3..], &h2, out);
        Ok(MlpTape { h1, h2 })
    }

    /// Accumulates `∂L/∂θ` into `grad` given `∂L/∂out` for the pass recorded
    /// in `tape` on input `x`.
    pub fn backward(&self, x: &[T], tape: &MlpTape<T>, d_out: &[T], grad: &mut [T]) {
        let s = self.sizes;
        let o = offsets(s);
        let p = &self.params;
        debug_assert_eq!(grad.len(), p.len());

        let mut d_h2 = vec![T::zero(); s[2]];
        for i in 0..s[3] {
            let g = d_out[i];
            if g == T::zero() {
                continue;
            }
            grad[o.b3 + i] += g;
            let row = o.w3 + i * s[2];
            for k in 0..s[2] {
                grad[row + k] += g * tape.h2[k];
                d_h2[k] += g * p[row + k];
            }
        }
        let mut d_h1 = vec![T::zero(); s[1]];
        for i in 0..s[2] {
            if tape.h2[i] <= T::zero() {
                continue;
            }
            let g = d_h2[i];
            grad[o.b2 + i] += g;
            let row = o.w2 + i * s[1];
            for k in 0..s[1] {
                grad[row + k] += g * tape.h1[k];
                d_h1[k] += g * p[row + k];
            }
        }
        for i in 0..s[1] {
            if tape.h1[i] <= T::zero() {
                continue;
            }
            let g = d_h1[i];
            grad[o.b1 + i] += g;
            let row = o.w1 + i * s[0];
            for k in 0..s[0] {
                grad[row + k] += g * x[k];
            }
        }
    }

    pub fn map<U: Scalar>(&self) -> Mlp<U> {
        Mlp {
            sizes: self.sizes,
            params: self.params.iter().map(|p| U::lit(p.as_f64())).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_network_outputs_zero() {
        let net = Mlp::<f64>::zeros([3, 64, 64, 2]);
        assert_eq!(net.eval(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn single_unit_chain_passes_positive_input() {
        // W1 = 1, b1 = 0, W2 = 1, b2 = 0, W3 = 1, b3 = 0
        let net = Mlp::from_params([1, 1, 1, 1], vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(net.eval(&[1.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn negative_pre_activation_contributes_nothing() {
        let net = Mlp::from_params([1, 1, 1, 1], vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.5]).unwrap();
        assert_eq!(net.eval(&[-3.0]).unwrap(), vec![0.5]);
    }

    #[test]
    fn wrong_input_length_is_rejected() {
        let net = Mlp::<f64>::zeros([3, 4, 4, 1]);
        assert!(matches!(net.eval(&[1.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn init_with_zero_output_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Mlp::<f64>::init([4, 8, 8, 2], true, &mut rng);
        assert_eq!(net.eval(&[0.3, 0.1, 0.9, 0.5]).unwrap(), vec![0.0, 0.0]);
        assert!(net.params().iter().any(|&p| p != 0.0));
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net = Mlp::<f64>::init([3, 5, 4, 2], false, &mut rng);
        for p in net.params_mut() {
            *p += 0.1;
        }
        let x = [0.2, 0.7, 0.4];
        let w = [0.3, -1.2];
        let loss = |n: &Mlp<f64>| {
            let y = n.eval(&x).unwrap();
            w[0] * y[0] + w[1] * y[1]
        };
        let mut out = [0.0; 2];
        let tape = net.eval_taped(&x, &mut out).unwrap();
        let mut g = vec![0.0; net.params().len()];
        net.backward(&x, &tape, &w, &mut g);
        for i in 0..g.len() {
            let mut a = net.clone();
            a.params_mut()[i] += 1e-6;
            let mut b = net.clone();
            b.params_mut()[i] -= 1e-6;
            let fd = (loss(&a) - loss(&b)) / 2e-6;
            assert!((fd - g[i]).abs() < 1e-7, "param {i}: {fd} vs {}", g[i]);
        }
    }
}
