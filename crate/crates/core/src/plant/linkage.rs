//! Triangle linkage mapping joint angle to cylinder length.
//!
//! Each cylinder spans two pivots at distances `a` and `b` from the joint
//! axis, so `y² = a² + b² - 2ab·cos(q + offset)`. The map is monotone on
//! `q + offset ∈ (0, π)`, which is where every joint operates.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkageGeometry<T> {
    /// Joint axis to cylinder base pivot (m).
    pub base_distance: T,
    /// Joint axis to rod-end pivot (m).
    pub rod_distance: T,
    /// Angle added to the joint angle to obtain the triangle's included angle (rad).
    pub offset: T,
    /// Pin-to-pin length of the fully retracted cylinder (m).
    pub retracted_length: T,
}

/// Cylinder length, its joint-space Jacobian and the Jacobian's rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkageKinematics<T> {
    /// Pin-to-pin length `y` (m).
    pub length: T,
    /// `∂y/∂q` (m/rad).
    pub jacobian: T,
    /// `d/dt ∂y/∂q` (m/(rad·s)).
    pub jacobian_rate: T,
}

impl<T: Scalar> LinkageGeometry<T> {
    pub fn min_length(&self) -> T {
        self.retracted_length
    }

    pub fn max_length(&self, stroke: T) -> T {
        self.retracted_length + stroke
    }

    pub fn mid_length(&self, stroke: T) -> T {
        self.retracted_length + stroke / T::lit(2.0)
    }

    /// Checks the triangle inequality over the full stroke.
    pub fn validate(&self, stroke: T) -> Result<()> {
        let (a, b) = (self.base_distance, self.rod_distance);
        if !(a > T::zero() && b > T::zero()) {
            return Err(Error::Config("linkage pivot distances must be > 0".into()));
        }
        let lo = (a - b).abs();
        let hi = a + b;
        if !(self.min_length() > lo && self.max_length(stroke) < hi) {
            return Err(Error::Config(format!(
                "linkage cannot realize cylinder lengths [{}, {}]; triangle admits ({lo}, {hi})",
                self.min_length(),
                self.max_length(stroke)
            )));
        }
        Ok(())
    }

    /// Cylinder length for joint angle `q`.
    pub fn length(&self, q: T) -> T {
        let (a, b) = (self.base_distance, self.rod_distance);
        (a * a + b * b - T::lit(2.0) * a * b * (q + self.offset).cos()).sqrt()
    }

    /// Length, Jacobian and Jacobian rate at `(q, q̇)`.
    pub fn kinematics(&self, q: T, q_dot: T) -> Result<LinkageKinematics<T>> {
        let (a, b) = (self.base_distance, self.rod_distance);
        let theta = q + self.offset;
        let y = self.length(q);
        let s = theta.sin();
        if !(y > T::zero()) || s.abs() < T::lit(1e-9) {
            return Err(Error::Domain(format!(
                "degenerate linkage triangle at q = {q} (included angle {theta})"
            )));
        }
        let jac = a * b * s / y;
        let jac_rate = q_dot * (a * b * theta.cos() - jac * jac) / y;
        Ok(LinkageKinematics {
            length: y,
            jacobian: jac,
            jacobian_rate: jac_rate,
        })
    }

    /// Joint angle for cylinder length `y` (inverse of [`Self::length`] on
    /// the `(0, π)` branch).
    pub fn angle(&self, y: T) -> Result<T> {
        let (a, b) = (self.base_distance, self.rod_distance);
        let c = (a * a + b * b - y * y) / (T::lit(2.0) * a * b);
        if !(c > -T::one() && c < T::one()) {
            return Err(Error::Domain(format!(
                "cylinder length {y} outside the linkage triangle"
            )));
        }
        Ok(c.acos() - self.offset)
    }

    /// Joint angle range reachable within the stroke.
    pub fn joint_range(&self, stroke: T) -> Result<(T, T)> {
        Ok((
            self.angle(self.min_length())?,
            self.angle(self.max_length(stroke))?,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::params::PlantConfig;
    use rand::{Rng, SeedableRng};

    fn geo() -> (LinkageGeometry<f64>, f64) {
        let c = PlantConfig::<f64>::excavator();
        (c.linkages[0], c.actuators[0].stroke)
    }

    #[test]
    fn right_angle_length() {
        let (g, _) = geo();
        let q = std::f64::consts::FRAC_PI_2 - g.offset;
        let y = g.length(q);
        let expected = (g.base_distance.powi(2) + g.rod_distance.powi(2)).sqrt();
        assert!((y - expected).abs() < 1e-12);
        assert!((g.angle(expected).unwrap() + g.offset - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn jacobian_rate_vanishes_at_rest() {
        let (g, _) = geo();
        assert_eq!(g.kinematics(0.1, 0.0).unwrap().jacobian_rate, 0.0);
    }

    #[test]
    fn round_trip_random_angles() {
        let (g, stroke) = geo();
        let (lo, hi) = g.joint_range(stroke).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let q = rng.gen_range(lo..hi);
            let back = g.angle(g.length(q)).unwrap();
            assert!((back - q).abs() < 1e-12, "{q} -> {back}");
        }
    }

    #[test]
    fn jacobian_matches_finite_difference() {
        let (g, _) = geo();
        let (q, qd, h) = (0.2, 0.3, 1e-6);
        let k = g.kinematics(q, qd).unwrap();
        let fd = (g.length(q + h) - g.length(q - h)) / (2.0 * h);
        assert!((k.jacobian - fd).abs() < 1e-8);
        let j = |q: f64| g.kinematics(q, 0.0).unwrap().jacobian;
        let fd_rate = (j(q + h) - j(q - h)) / (2.0 * h) * qd;
        assert!((k.jacobian_rate - fd_rate).abs() < 1e-8);
    }

    #[test]
    fn degenerate_triangle_is_error() {
        let (g, _) = geo();
        assert!(g.kinematics(-g.offset, 0.0).is_err());
        assert!(g.angle(100.0).is_err());
    }
}
