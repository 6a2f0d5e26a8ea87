//! Minimal 2×2 matrix used by the planar two-link dynamics and kinematics.

use std::ops::{Add, Mul, Sub};

use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2<T> {
    pub m: [[T; 2]; 2],
}

impl<T: Scalar> Mat2<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Self {
        Self { m: [[a, b], [c, d]] }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero(), T::zero())
    }

    pub fn diag(a: T, d: T) -> Self {
        Self::new(a, T::zero(), T::zero(), d)
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn det(&self) -> T {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// Inverse, or `None` when the determinant is not a normal number.
    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if !det.is_normal() {
            return None;
        }
        let inv = T::one() / det;
        Some(Self::new(
            self.m[1][1] * inv,
            -self.m[0][1] * inv,
            -self.m[1][0] * inv,
            self.m[0][0] * inv,
        ))
    }

    pub fn mul_vec(&self, v: [T; 2]) -> [T; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    /// Solves `self · x = b` by Cramer's rule.
    pub fn solve(&self, b: [T; 2]) -> Option<[T; 2]> {
        self.inverse().map(|inv| inv.mul_vec(b))
    }

    pub fn scale(&self, s: T) -> Self {
        Self::new(
            self.m[0][0] * s,
            self.m[0][1] * s,
            self.m[1][0] * s,
            self.m[1][1] * s,
        )
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn sym_eigenvalues(&self) -> [T; 2] {
        let two = T::lit(2.0);
        let a = self.m[0][0];
        let d = self.m[1][1];
        let b = (self.m[0][1] + self.m[1][0]) / two;
        let mean = (a + d) / two;
        let r = (((a - d) / two).powi(2) + b * b).sqrt();
        [mean - r, mean + r]
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> T {
        let mut out = T::zero();
        for row in &self.m {
            for &x in row {
                out = out.max(x.abs());
            }
        }
        out
    }
}

impl<T: Scalar> Add for Mat2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(
            self.m[0][0] + o.m[0][0],
            self.m[0][1] + o.m[0][1],
            self.m[1][0] + o.m[1][0],
            self.m[1][1] + o.m[1][1],
        )
    }
}

impl<T: Scalar> Sub for Mat2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(
            self.m[0][0] - o.m[0][0],
            self.m[0][1] - o.m[0][1],
            self.m[1][0] - o.m[1][0],
            self.m[1][1] - o.m[1][1],
        )
    }
}

impl<T: Scalar> Mul for Mat2<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let a = &self.m;
        let b = &o.m;
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_round_trip() {
        let a = Mat2::new(4.0, 1.0, 2.0, 3.0);
        let i = a * a.inverse().unwrap();
        assert!((i - Mat2::diag(1.0, 1.0)).max_abs() < 1e-15);
    }

    #[test]
    fn singular_has_no_inverse() {
        assert!(Mat2::new(1.0, 2.0, 2.0, 4.0).inverse().is_none());
    }

    #[test]
    fn symmetric_eigenvalues() {
        let e: [f64; 2] = Mat2::new(2.0, 1.0, 1.0, 2.0).sym_eigenvalues();
        assert!((e[0] - 1.0).abs() < 1e-15 && (e[1] - 3.0).abs() < 1e-15);
    }
}
