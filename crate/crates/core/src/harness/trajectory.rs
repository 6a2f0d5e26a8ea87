//! Reference trajectories with analytic derivatives up to third order.

use serde::{Deserialize, Serialize};

use crate::control::Reference;
use crate::error::{Error, Result};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TrajectorySpec {
    /// Tip circle `c + r·(cos ωt, sin ωt)` in the base frame (m, rad/s),
    /// resolved through inverse kinematics.
    Circle {
        center: [f64; 2],
        radius: f64,
        omega: f64,
        duration: f64,
    },
    /// Joint-space `offset + amplitude·sin(2π·frequency·t)` per joint.
    Sinusoid {
        offset: [f64; 2],
        amplitude: [f64; 2],
        frequency: [f64; 2],
        duration: f64,
    },
    /// Joint-space cubic Hermite spline through `(t, q1, q2)` knots with
    /// Catmull-Rom tangents and zero end slopes.
    Spline { knots: Vec<[f64; 3]> },
}

impl TrajectorySpec {
    /// The tip circle of the default tracking experiment.
    pub fn default_circle() -> Self {
        TrajectorySpec::Circle {
            center: [6.80, -2.12],
            radius: 1.0,
            omega: 0.2 * std::f64::consts::PI,
            duration: 20.0,
        }
    }

    pub fn duration(&self) -> f64 {
        match self {
            TrajectorySpec::Circle { duration, .. } | TrajectorySpec::Sinusoid { duration, .. } => *duration,
            TrajectorySpec::Spline { knots } => knots.last().map_or(0.0, |k| k[0]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match self {
            TrajectorySpec::Circle {
                radius,
                omega,
                duration,
                center,
            } => {
                if !(radius.is_finite() && *radius >= 0.0 && omega.is_finite())
                    || !center.iter().all(|c| c.is_finite())
                {
                    return bad(format!("invalid circle radius {radius} / omega {omega}"));
                }
                if !(*duration >= 0.0) {
                    return bad(format!("duration must be >= 0, got {duration}"));
                }
            }
            TrajectorySpec::Sinusoid { duration, .. } => {
                if !(*duration >= 0.0) {
                    return bad(format!("duration must be >= 0, got {duration}"));
                }
            }
            TrajectorySpec::Spline { knots } => {
                if knots.is_empty() {
                    return bad("spline needs at least one knot".into());
                }
                if knots.windows(2).any(|w| !(w[1][0] > w[0][0])) {
                    return bad("spline knot times must increase".into());
                }
            }
        }
        Ok(())
    }

    /// Tip position, velocity, acceleration and jerk of a Cartesian spec.
    pub fn cartesian(&self, t: f64) -> Option<[[f64; 2]; 4]> {
        match *self {
            TrajectorySpec::Circle {
                center,
                radius,
                omega,
                ..
            } => {
                let (s, c) = (omega * t).sin_cos();
                let w = omega;
                Some([
                    [center[0] + radius * c, center[1] + radius * s],
                    [-radius * w * s, radius * w * c],
                    [-radius * w * w * c, -radius * w * w * s],
                    [radius * w * w * w * s, -radius * w * w * w * c],
                ])
            }
            _ => None,
        }
    }

    /// Time span covering the traversed reference path once (for path error).
    pub fn path_span(&self) -> f64 {
        match *self {
            TrajectorySpec::Circle { omega, duration, .. } if omega != 0.0 => {
                (2.0 * std::f64::consts::PI / omega.abs()).min(duration)
            }
            _ => self.duration(),
        }
    }
}

/// Planar two-link kinematics with link lengths `l1`, `l2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLink<T> {
    pub l1: T,
    pub l2: T,
}

impl<T: Scalar> TwoLink<T> {
    pub fn forward(&self, q: [T; 2]) -> [T; 2] {
        let a = q[0] + q[1];
        [
            self.l1 * q[0].cos() + self.l2 * a.cos(),
            self.l1 * q[0].sin() + self.l2 * a.sin(),
        ]
    }

    /// Elbow solution with `q2 ≤ 0`.
    pub fn inverse(&self, p: [T; 2]) -> Result<[T; 2]> {
        let (l1, l2) = (self.l1, self.l2);
        let r2 = p[0] * p[0] + p[1] * p[1];
        let c2 = (r2 - l1 * l1 - l2 * l2) / (T::lit(2.0) * l1 * l2);
        if !(c2 >= -T::one() && c2 <= T::one()) {
            return Err(Error::Domain(format!(
                "target ({}, {}) outside the reachable workspace",
                p[0], p[1]
            )));
        }
        let q2 = -c2.acos();
        let q1 = p[1].atan2(p[0]) - (l2 * q2.sin()).atan2(l1 + l2 * q2.cos());
        Ok([q1, q2])
    }

    /// Joint angles and their first three derivatives from tip position
    /// derivatives `[p, ṗ, p̈, p⃛]`.
    ///
    /// With absolute link angles `θ1 = q1`, `θ2 = q1 + q2` the tip is
    /// `Σ l_k·e^{iθ_k}`; each derivative order gives a linear system in the
    /// highest angle derivative with the same matrix.
    pub fn inverse_derivatives(&self, p: [[T; 2]; 4]) -> Result<[[T; 2]; 4]> {
        let q = self.inverse(p[0])?;
        let th = [q[0], q[0] + q[1]];
        let l = [self.l1, self.l2];
        let e: [[T; 2]; 2] = std::array::from_fn(|k| [l[k] * th[k].cos(), l[k] * th[k].sin()]);
        // d/dθ_k of l_k e^{iθ_k} is i·l_k e^{iθ_k} = (−l s, l c)
        let a = crate::mat2::Mat2::new(-e[0][1], -e[1][1], e[0][0], e[1][0]);
        let solve = |rhs: [T; 2]| {
            a.solve(rhs)
                .ok_or_else(|| Error::Domain("inverse kinematics at a singular configuration".into()))
        };
        let rot = |v: [T; 2]| [-v[1], v[0]];
        let th1 = solve(p[1])?;
        let mut rhs = p[2];
        for k in 0..2 {
            let w2 = th1[k] * th1[k];
            rhs[0] += w2 * e[k][0];
            rhs[1] += w2 * e[k][1];
        }
        let th2 = solve(rhs)?;
        let mut rhs = p[3];
        let three = T::lit(3.0);
        for k in 0..2 {
            let re = three * th1[k] * th2[k];
            let im = th1[k] * th1[k] * th1[k];
            let ie = rot(e[k]);
            rhs[0] += re * e[k][0] + im * ie[0];
            rhs[1] += re * e[k][1] + im * ie[1];
        }
        let th3 = solve(rhs)?;
        let to_q = |t: [T; 2]| [t[0], t[1] - t[0]];
        Ok([q, to_q(th1), to_q(th2), to_q(th3)])
    }
}

fn hermite(t: f64, t0: f64, t1: f64, p0: f64, p1: f64, m0: f64, m1: f64) -> [f64; 4] {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let (s2, s3) = (s * s, s * s * s);
    let pos = (2.0 * s3 - 3.0 * s2 + 1.0) * p0
        + (s3 - 2.0 * s2 + s) * h * m0
        + (-2.0 * s3 + 3.0 * s2) * p1
        + (s3 - s2) * h * m1;
    let d1 = ((6.0 * s2 - 6.0 * s) * p0
        + (3.0 * s2 - 4.0 * s + 1.0) * h * m0
        + (-6.0 * s2 + 6.0 * s) * p1
        + (3.0 * s2 - 2.0 * s) * h * m1)
        / h;
    let d2 = ((12.0 * s - 6.0) * p0 + (6.0 * s - 4.0) * h * m0 + (-12.0 * s + 6.0) * p1 + (6.0 * s - 2.0) * h * m1)
        / (h * h);
    let d3 = (12.0 * p0 + 6.0 * h * m0 - 12.0 * p1 + 6.0 * h * m1) / (h * h * h);
    [pos, d1, d2, d3]
}

fn spline_eval(knots: &[[f64; 3]], t: f64, joint: usize) -> [f64; 4] {
    let n = knots.len();
    let c = joint + 1;
    if n == 1 || t <= knots[0][0] {
        return [knots[0][c], 0.0, 0.0, 0.0];
    }
    if t >= knots[n - 1][0] {
        return [knots[n - 1][c], 0.0, 0.0, 0.0];
    }
    let slope = |i: usize| -> f64 {
        if i == 0 || i == n - 1 {
            0.0
        } else {
            (knots[i + 1][c] - knots[i - 1][c]) / (knots[i + 1][0] - knots[i - 1][0])
        }
    };
    let i = knots.partition_point(|k| k[0] <= t) - 1;
    hermite(t, knots[i][0], knots[i + 1][0], knots[i][c], knots[i + 1][c], slope(i), slope(i + 1))
}

/// Joint references at time `t`.
pub fn gen_reference(spec: &TrajectorySpec, kin: &TwoLink<f64>, t: f64) -> Result<[Reference<f64>; 2]> {
    let per_joint = |d: [[f64; 2]; 4]| -> [Reference<f64>; 2] {
        std::array::from_fn(|j| Reference {
            x1: d[0][j],
            x2: d[1][j],
            x3: d[2][j],
            x3_dot: d[3][j],
        })
    };
    match spec {
        TrajectorySpec::Circle { .. } => {
            let p = spec.cartesian(t).expect("circle is cartesian");
            Ok(per_joint(kin.inverse_derivatives(p)?))
        }
        TrajectorySpec::Sinusoid {
            offset,
            amplitude,
            frequency,
            ..
        } => Ok(std::array::from_fn(|j| {
            let w = 2.0 * std::f64::consts::PI * frequency[j];
            let (s, c) = (w * t).sin_cos();
            let a = amplitude[j];
            Reference {
                x1: offset[j] + a * s,
                x2: a * w * c,
                x3: -a * w * w * s,
                x3_dot: -a * w * w * w * c,
            }
        })),
        TrajectorySpec::Spline { knots } => Ok(std::array::from_fn(|j| {
            let d = spline_eval(knots, t, j);
            Reference {
                x1: d[0],
                x2: d[1],
                x3: d[2],
                x3_dot: d[3],
            }
        })),
    }
}

/// Tip position of the reference at `t`.
pub fn reference_tip(spec: &TrajectorySpec, kin: &TwoLink<f64>, t: f64) -> Result<[f64; 2]> {
    match spec.cartesian(t) {
        Some(p) => Ok(p[0]),
        None => {
            let r = gen_reference(spec, kin, t)?;
            Ok(kin.forward([r[0].x1, r[1].x1]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kin() -> TwoLink<f64> {
        TwoLink { l1: 7.2, l2: 2.9 }
    }

    #[test]
    fn circle_starts_at_its_rightmost_point() {
        let p = TrajectorySpec::default_circle().cartesian(0.0).unwrap();
        assert!((p[0][0] - 7.80).abs() < 1e-12 && (p[0][1] + 2.12).abs() < 1e-12);
        assert_eq!(p[1][0], 0.0);
    }

    #[test]
    fn inverse_kinematics_round_trip() {
        let k = kin();
        for &p in &[[7.8, -2.12], [5.8, -2.12], [6.8, -1.12], [6.8, -3.12]] {
            let q = k.inverse(p).unwrap();
            assert!(q[1] <= 0.0);
            let back = k.forward(q);
            assert!((back[0] - p[0]).abs() < 1e-12 && (back[1] - p[1]).abs() < 1e-12);
        }
        assert!(matches!(k.inverse([20.0, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn joint_derivatives_match_finite_differences() {
        let k = kin();
        let spec = TrajectorySpec::default_circle();
        let h = 1e-4;
        for &t in &[0.0, 1.3, 4.7, 8.2] {
            let r = gen_reference(&spec, &k, t).unwrap();
            let rp = gen_reference(&spec, &k, t + h).unwrap();
            let rm = gen_reference(&spec, &k, t - h).unwrap();
            for j in 0..2 {
                let fd1 = (rp[j].x1 - rm[j].x1) / (2.0 * h);
                let fd2 = (rp[j].x2 - rm[j].x2) / (2.0 * h);
                let fd3 = (rp[j].x3 - rm[j].x3) / (2.0 * h);
                assert!((fd1 - r[j].x2).abs() < 1e-7, "{fd1} {}", r[j].x2);
                assert!((fd2 - r[j].x3).abs() < 1e-7);
                assert!((fd3 - r[j].x3_dot).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn constant_spline_has_zero_derivatives() {
        let spec = TrajectorySpec::Spline {
            knots: vec![[0.0, 0.2, -1.5], [1.0, 0.2, -1.5], [3.0, 0.2, -1.5]],
        };
        for &t in &[0.0, 0.5, 2.0, 5.0] {
            for r in gen_reference(&spec, &kin(), t).unwrap() {
                assert_eq!((r.x2, r.x3, r.x3_dot), (0.0, 0.0, 0.0));
            }
        }
    }

    #[test]
    fn spline_interpolates_knots_with_continuous_slope() {
        let spec = TrajectorySpec::Spline {
            knots: vec![[0.0, 0.0, 0.0], [1.0, 1.0, -1.0], [2.0, 0.5, 0.0]],
        };
        let r = gen_reference(&spec, &kin(), 1.0).unwrap();
        assert!((r[0].x1 - 1.0).abs() < 1e-12);
        let a = gen_reference(&spec, &kin(), 1.0 - 1e-9).unwrap();
        assert!((a[0].x2 - r[0].x2).abs() < 1e-6);
    }
}
