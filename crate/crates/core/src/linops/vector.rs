use std::ops::{Add, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense vector with finite entries.
///
/// Values are immutable in the public API: arithmetic returns new vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    /// Validating constructor: rejects empty input and NaN/Inf entries.
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Empty);
        }
        if let Some((index, &value)) = data.iter().enumerate().find(|(_, x)| !x.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self(data))
    }

    /// Wraps data produced by arithmetic on already validated vectors.
    pub(crate) fn from_raw(data: Vec<f64>) -> Self {
        Self(data)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn filled(dim: usize, value: f64) -> Self {
        Self(vec![value; dim])
    }

    pub fn unit(dim: usize, index: usize) -> Self {
        let mut data = vec![0.0; dim];
        data[index] = 1.0;
        Self(data)
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize) -> f64) -> Self {
        Self((0..dim).map(f).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    /// True when every entry is finite; arithmetic can overflow on divergent runs.
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dot: dimension mismatch");
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm1(&self) -> f64 {
        self.0.iter().map(|x| x.abs()).sum()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Euclidean distance.
    pub fn dist(&self, other: &Vector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dist: dimension mismatch");
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    pub fn scale(&self, factor: f64) -> Vector {
        Self(self.0.iter().map(|x| factor * x).collect())
    }

    /// `self + factor * other`.
    pub fn axpy(&self, factor: f64, other: &Vector) -> Vector {
        assert_eq!(self.dim(), other.dim(), "axpy: dimension mismatch");
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + factor * b).collect())
    }

    /// `a * self + b * other`.
    pub fn lincomb(&self, a: f64, other: &Vector, b: f64) -> Vector {
        assert_eq!(self.dim(), other.dim(), "lincomb: dimension mismatch");
        Self(self.0.iter().zip(&other.0).map(|(x, y)| a * x + b * y).collect())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Vector {
        Self(self.0.iter().map(|&x| f(x)).collect())
    }

    pub fn zip_map(&self, other: &Vector, f: impl Fn(f64, f64) -> f64) -> Vector {
        assert_eq!(self.dim(), other.dim(), "zip_map: dimension mismatch");
        Self(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect())
    }

    /// Contiguous sub-vector `[start, start + len)`.
    pub fn segment(&self, start: usize, len: usize) -> Vector {
        Self(self.0[start..start + len].to_vec())
    }

    pub fn gather(&self, indices: &[usize]) -> Vector {
        Self(indices.iter().map(|&i| self.0[i]).collect())
    }

    /// Copy of `self` with `block` written at `start`.
    pub fn with_segment(&self, start: usize, block: &Vector) -> Vector {
        let mut data = self.0.clone();
        data[start..start + block.dim()].copy_from_slice(&block.0);
        Self(data)
    }

    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a Vector>) -> Vector {
        Self(parts.into_iter().flat_map(|v| v.0.iter().copied()).collect())
    }

    /// Splits into consecutive blocks of the given sizes.
    pub fn split(&self, sizes: &[usize]) -> Vec<Vector> {
        assert_eq!(sizes.iter().sum::<usize>(), self.dim(), "split: sizes do not cover vector");
        let mut start = 0;
        sizes
            .iter()
            .map(|&len| {
                let block = self.segment(start, len);
                start += len;
                block
            })
            .collect()
    }

    /// Sum of equally sized vectors, accumulated in iteration order.
    pub fn sum_of<'a>(dim: usize, parts: impl IntoIterator<Item = &'a Vector>) -> Vector {
        parts.into_iter().fold(Vector::zeros(dim), |acc, v| &acc + v)
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(data: Vec<f64>) -> Result<Self> {
        Vector::new(data)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add<&Vector> for &Vector {
    type Output = Vector;

    fn add(self, rhs: &Vector) -> Vector {
        self.axpy(1.0, rhs)
    }
}

impl Sub<&Vector> for &Vector {
    type Output = Vector;

    fn sub(self, rhs: &Vector) -> Vector {
        self.axpy(-1.0, rhs)
    }
}

impl Mul<f64> for &Vector {
    type Output = Vector;

    fn mul(self, rhs: f64) -> Vector {
        self.scale(rhs)
    }
}

impl Neg for &Vector {
    type Output = Vector;

    fn neg(self) -> Vector {
        self.scale(-1.0)
    }
}
