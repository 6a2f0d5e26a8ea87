//! A plant whose dynamics are exactly a given reversible model.

use crate::error::{Error, Result};
use crate::revnm::{Derivatives, FeatureLayout, RevnmModel};
use crate::Scalar;

/// Ground-truth plant `ẋ = f_model(x, u) + (0, 0, d)`, where `d` is an
/// optional disturbance on the top derivative.
#[derive(Debug, Clone)]
pub struct SyntheticPlant<T> {
    pub model: RevnmModel<T>,
    /// `[x1, x2, x3]` per joint.
    pub state: Vec<[T; 3]>,
    pub t: T,
}

impl<T: Scalar> SyntheticPlant<T> {
    /// The model must predict every joint of its feature layout and use no lags.
    pub fn new(model: RevnmModel<T>, state: Vec<[T; 3]>) -> Result<Self> {
        let layout = model.layout();
        if layout.lags != 0 {
            return Err(Error::Config("synthetic plant needs a lag-free feature layout".into()));
        }
        if model.outputs() != (0..layout.joints).collect::<Vec<_>>().as_slice() {
            return Err(Error::Config(
                "synthetic plant model must predict every joint in order".into(),
            ));
        }
        if state.len() != layout.joints {
            return Err(Error::dim("synthetic plant state", layout.joints, state.len()));
        }
        Ok(Self {
            model,
            state,
            t: T::zero(),
        })
    }

    pub fn features(&self) -> Vec<T> {
        features_of(self.model.layout(), &self.state)
    }

    /// `(ẋ1, ẋ2, ẋ3)` at the current state.
    pub fn derivative(&self, u: &[T]) -> Result<Derivatives<T>> {
        self.model.forward(&self.features(), u)
    }

    /// One RK4 step with `u` and the disturbance `d3` held over the step.
    pub fn step(&mut self, u: &[T], d3: &[T], dt: T) -> Result<()> {
        let n = self.state.len();
        if d3.len() != n {
            return Err(Error::dim("disturbance", n, d3.len()));
        }
        let layout = self.model.layout();
        let f = |x: &[[T; 3]]| -> Result<Vec<[T; 3]>> {
            let d = self.model.forward(&features_of(layout, x), u)?;
            Ok((0..n).map(|i| [d.x1_dot[i], d.x2_dot[i], d.x3_dot[i] + d3[i]]).collect())
        };
        let add = |x: &[[T; 3]], k: &[[T; 3]], a: T| -> Vec<[T; 3]> {
            x.iter()
                .zip(k)
                .map(|(x, k)| [x[0] + a * k[0], x[1] + a * k[1], x[2] + a * k[2]])
                .collect()
        };
        let half = dt / T::lit(2.0);
        let k1 = f(&self.state)?;
        let k2 = f(&add(&self.state, &k1, half))?;
        let k3 = f(&add(&self.state, &k2, half))?;
        let k4 = f(&add(&self.state, &k3, dt))?;
        let two = T::lit(2.0);
        let sixth = dt / T::lit(6.0);
        for i in 0..n {
            for c in 0..3 {
                self.state[i][c] += sixth * (k1[i][c] + two * k2[i][c] + two * k3[i][c] + k4[i][c]);
            }
        }
        self.t += dt;
        if self.state.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("synthetic plant state at t = {}", self.t)));
        }
        Ok(())
    }
}

fn features_of<T: Scalar>(layout: FeatureLayout, x: &[[T; 3]]) -> Vec<T> {
    let mut h = vec![T::zero(); layout.dim()];
    for (j, s) in x.iter().enumerate() {
        for k in 0..3 {
            h[layout.index(0, j, k)] = s[k];
        }
    }
    h
}
