//! Adam with bias correction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate must be > 0, got {}", self.learning_rate)));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::Config(format!("{name} must be in (0, 1), got {b}")));
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam<T> {
    m: Vec<T>,
    v: Vec<T>,
    steps: u32,
}

impl<T: Scalar> Adam<T> {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![T::zero(); n],
            v: vec![T::zero(); n],
            steps: 0,
        }
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    pub fn step(&mut self, params: &mut [T], grads: &[T], cfg: &AdamConfig) -> Result<()> {
        if params.len() != self.m.len() {
            return Err(Error::dim("adam parameters", self.m.len(), params.len()));
        }
        if grads.len() != self.m.len() {
            return Err(Error::dim("adam gradients", self.m.len(), grads.len()));
        }
        self.steps += 1;
        let (b1, b2) = (T::lit(cfg.beta1), T::lit(cfg.beta2));
        let lr = T::lit(cfg.learning_rate);
        let eps = T::lit(cfg.epsilon);
        let c1 = T::one() - b1.powi(self.steps as i32);
        let c2 = T::one() - b2.powi(self.steps as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = b1 * self.m[i] + (T::one() - b1) * g;
            self.v[i] = b2 * self.v[i] + (T::one() - b2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut a = Adam::new(1);
        let mut w = [0.0f64];
        a.step(&mut w, &[1.0], &AdamConfig::default()).unwrap();
        assert!((w[0] + 1e-3).abs() < 1e-10, "{}", w[0]);
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut a = Adam::new(3);
        let mut w = [1.0f64, -2.0, 3.0];
        for _ in 0..10 {
            a.step(&mut w, &[0.0; 3], &AdamConfig::default()).unwrap();
        }
        assert_eq!(w, [1.0, -2.0, 3.0]);
    }

    #[test]
    fn opposite_gradients_move_symmetrically() {
        let mut a = Adam::new(2);
        let mut w = [0.0f64, 0.0];
        for _ in 0..5 {
            a.step(&mut w, &[0.3, -0.3], &AdamConfig::default()).unwrap();
        }
        assert_eq!(w[0], -w[1]);
        assert!(w[0] < 0.0);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut a = Adam::<f64>::new(2);
        assert!(a.step(&mut [0.0; 3], &[0.0; 3], &AdamConfig::default()).is_err());
    }
}
