//! Planar two-link rigid-body dynamics `M(q)q̈ + C(q,q̇)q̇ + G(q) = τ`.
//!
//! Joint 1 (boom) is measured from the horizontal, joint 2 (arm) relative
//! to link 1. Gravity acts along −y.

use serde::{Deserialize, Serialize};

use crate::mat2::Mat2;
use crate::{Error, Result, Scalar};

pub const GRAVITY: f64 = 9.81;

/// Converts a rotary damping coefficient from N·m/(rev/min) to N·m·s/rad.
pub fn damping_from_rpm<T: Scalar>(per_rpm: T) -> T {
    per_rpm * T::lit(60.0) / (T::lit(2.0) * T::PI())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams<T> {
    /// Mass `M` (kg).
    pub mass: T,
    /// Moment of inertia about the center of mass `J` (kg·m²).
    pub inertia: T,
    /// Link length `a` (m).
    pub length: T,
    /// Distance from the joint axis to the center of mass (m).
    pub com: T,
    /// Rotary damping `b_z` (N·m·s/rad).
    pub damping: T,
}

impl<T: Scalar> LinkParams<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mass", self.mass),
            ("inertia", self.inertia),
            ("length", self.length),
            ("center of mass", self.com),
            ("damping", self.damping),
        ] {
            if !(v > T::zero()) {
                return Err(Error::Config(format!("link {name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Inertia, Coriolis/centrifugal and gravity terms at one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidBodyTerms<T> {
    pub mass: Mat2<T>,
    pub coriolis: Mat2<T>,
    pub gravity: [T; 2],
}

pub fn rigid_body_matrices<T: Scalar>(
    q: [T; 2],
    q_dot: [T; 2],
    links: &[LinkParams<T>; 2],
    gravity: T,
) -> RigidBodyTerms<T> {
    let [l1, l2] = links;
    let (m1, m2) = (l1.mass, l2.mass);
    let (i1, i2) = (l1.inertia, l2.inertia);
    let (a1, c1, c2) = (l1.length, l1.com, l2.com);
    let two = T::lit(2.0);
    let cos2 = q[1].cos();

    let m11 = i1 + i2 + m1 * c1 * c1 + m2 * (a1 * a1 + c2 * c2 + two * a1 * c2 * cos2);
    let m12 = i2 + m2 * (c2 * c2 + a1 * c2 * cos2);
    let m22 = i2 + m2 * c2 * c2;

    let h = -m2 * a1 * c2 * q[1].sin();
    let coriolis = Mat2::new(h * q_dot[1], h * (q_dot[0] + q_dot[1]), -h * q_dot[0], T::zero());

    let g1 = (m1 * c1 + m2 * a1) * gravity * q[0].cos() + m2 * c2 * gravity * (q[0] + q[1]).cos();
    let g2 = m2 * c2 * gravity * (q[0] + q[1]).cos();

    RigidBodyTerms {
        mass: Mat2::new(m11, m12, m12, m22),
        coriolis,
        gravity: [g1, g2],
    }
}

/// Kinetic energy `½ q̇ᵀ M q̇`.
pub fn kinetic_energy<T: Scalar>(q: [T; 2], q_dot: [T; 2], links: &[LinkParams<T>; 2]) -> T {
    let m = rigid_body_matrices(q, [T::zero(); 2], links, T::zero()).mass;
    let mq = m.mul_vec(q_dot);
    (q_dot[0] * mq[0] + q_dot[1] * mq[1]) / T::lit(2.0)
}

/// Gravitational potential energy relative to the joint-1 axis.
pub fn potential_energy<T: Scalar>(q: [T; 2], links: &[LinkParams<T>; 2], gravity: T) -> T {
    let [l1, l2] = links;
    let y1 = l1.com * q[0].sin();
    let y2 = l1.length * q[0].sin() + l2.com * (q[0] + q[1]).sin();
    gravity * (l1.mass * y1 + l2.mass * y2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::params::PlantConfig;
    use rand::{Rng, SeedableRng};

    fn links() -> [LinkParams<f64>; 2] {
        PlantConfig::<f64>::excavator().links
    }

    #[test]
    fn rpm_conversion() {
        let d = damping_from_rpm(10000.0);
        assert!((d - 10000.0 * 60.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-9);
    }

    #[test]
    fn coriolis_vanishes_at_rest() {
        let t = rigid_body_matrices([0.3, -1.5], [0.0, 0.0], &links(), GRAVITY);
        assert_eq!(t.coriolis.max_abs(), 0.0);
    }

    #[test]
    fn mass_matrix_positive_definite() {
        let links = links();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let q = [rng.gen_range(-3.2..3.2), rng.gen_range(-3.2..3.2)];
            let m = rigid_body_matrices(q, [0.0; 2], &links, GRAVITY).mass;
            assert_eq!(m.m[0][1], m.m[1][0]);
            assert!(m.sym_eigenvalues()[0] > 0.0);
        }
    }

    #[test]
    fn mass_rate_minus_twice_coriolis_is_skew() {
        let links = links();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let q = [rng.gen_range(-1.0..1.0), rng.gen_range(-3.0..0.0)];
            let qd = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let h = 1e-6;
            let plus = rigid_body_matrices([q[0] + h * qd[0], q[1] + h * qd[1]], qd, &links, GRAVITY).mass;
            let minus = rigid_body_matrices([q[0] - h * qd[0], q[1] - h * qd[1]], qd, &links, GRAVITY).mass;
            let m_dot = (plus - minus).scale(1.0 / (2.0 * h));
            let t = rigid_body_matrices(q, qd, &links, GRAVITY);
            let n = m_dot - t.coriolis.scale(2.0);
            let sym = n + n.transpose();
            let scale = m_dot.max_abs().max(t.coriolis.max_abs()).max(1.0);
            assert!(sym.max_abs() / scale < 1e-6, "{sym:?}");
        }
    }

    #[test]
    fn gravity_is_gradient_of_potential() {
        let links = links();
        let q = [0.2, -1.7];
        let h = 1e-6;
        let g = rigid_body_matrices(q, [0.0; 2], &links, GRAVITY).gravity;
        for j in 0..2 {
            let mut qp = q;
            let mut qm = q;
            qp[j] += h;
            qm[j] -= h;
            let fd = (potential_energy(qp, &links, GRAVITY) - potential_energy(qm, &links, GRAVITY)) / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-4 * g[j].abs().max(1.0));
        }
    }
}
