//! Per-dimension min-max scaling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Scalar;

/// Maps each dimension affinely from `[min, max]` onto `[0, 1]`.
///
/// Dimensions whose range is zero (or not normal) are flagged as degenerate
/// and passed through unscaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMax<T> {
    pub min: Vec<T>,
    pub max: Vec<T>,
    pub degenerate: Vec<bool>,
}

impl<T: Scalar> MinMax<T> {
    /// Leaves every dimension unchanged.
    pub fn identity(dim: usize) -> Self {
        Self {
            min: vec![T::zero(); dim],
            max: vec![T::one(); dim],
            degenerate: vec![false; dim],
        }
    }

    pub fn from_bounds(min: Vec<T>, max: Vec<T>) -> Result<Self> {
        if min.len() != max.len() {
            return Err(Error::dim("min-max bounds", min.len(), max.len()));
        }
        let mut degenerate = Vec::with_capacity(min.len());
        for (lo, hi) in min.iter().zip(&max) {
            if !(lo.is_finite() && hi.is_finite()) || hi < lo {
                return Err(Error::Data(format!("invalid min-max bounds [{lo}, {hi}]")));
            }
            degenerate.push(!(*hi - *lo).is_normal());
        }
        Ok(Self {
            min,
            max,
            degenerate,
        })
    }

    /// Fits bounds to the rows yielded by `rows`.
    pub fn fit<'a, I>(dim: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [T]>,
    {
        let mut min = vec![T::infinity(); dim];
        let mut max = vec![T::neg_infinity(); dim];
        let mut n = 0usize;
        for row in rows {
            if row.len() != dim {
                return Err(Error::dim("min-max fit row", dim, row.len()));
            }
            for (k, &v) in row.iter().enumerate() {
                min[k] = min[k].min(v);
                max[k] = max[k].max(v);
            }
            n += 1;
        }
        if n == 0 {
            return Err(Error::Data("cannot fit min-max statistics to zero rows".into()));
        }
        Self::from_bounds(min, max)
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn range(&self, k: usize) -> T {
        if self.degenerate[k] {
            T::one()
        } else {
            self.max[k] - self.min[k]
        }
    }

    pub fn normalize_into(&self, v: &[T], out: &mut [T]) {
        for k in 0..self.dim() {
            out[k] = if self.degenerate[k] {
                v[k]
            } else {
                (v[k] - self.min[k]) / self.range(k)
            };
        }
    }

    pub fn normalize(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.dim() {
            return Err(Error::dim("normalize", self.dim(), v.len()));
        }
        let mut out = vec![T::zero(); v.len()];
        self.normalize_into(v, &mut out);
        Ok(out)
    }

    pub fn denormalize(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.dim() {
            return Err(Error::dim("denormalize", self.dim(), v.len()));
        }
        Ok((0..v.len())
            .map(|k| {
                if self.degenerate[k] {
                    v[k]
                } else {
                    self.min[k] + v[k] * self.range(k)
                }
            })
            .collect())
    }

    pub fn map<U: Scalar>(&self) -> MinMax<U> {
        MinMax {
            min: self.min.iter().map(|x| U::lit(x.as_f64())).collect(),
            max: self.max.iter().map(|x| U::lit(x.as_f64())).collect(),
            degenerate: self.degenerate.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scales_to_unit_interval() {
        let rows: Vec<Vec<f64>> = vec![vec![2.0], vec![4.0], vec![6.0]];
        let mm = MinMax::fit(1, rows.iter().map(|r| r.as_slice())).unwrap();
        let out: Vec<f64> = rows.iter().map(|r| mm.normalize(r).unwrap()[0]).collect();
        assert_eq!(out, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn constant_dimension_is_flagged_and_passed_through() {
        let rows: Vec<Vec<f64>> = vec![vec![1.0, 3.0], vec![2.0, 3.0]];
        let mm = MinMax::fit(2, rows.iter().map(|r| r.as_slice())).unwrap();
        assert_eq!(mm.degenerate, vec![false, true]);
        assert_eq!(mm.normalize(&[1.5, 3.0]).unwrap(), vec![0.5, 3.0]);
    }

    #[test]
    fn empty_fit_is_an_error() {
        let rows: Vec<Vec<f64>> = vec![];
        assert!(MinMax::fit(1, rows.iter().map(|r| r.as_slice())).is_err());
    }
}
