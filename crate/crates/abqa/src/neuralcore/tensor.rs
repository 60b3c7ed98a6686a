//! Dense row-major tensor of f64 values. Shapes are validated at
//! construction and operation boundaries; values entering public ops must
//! be finite.

use rand::distributions::{Distribution, Uniform};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Tensor {
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Tensor> {
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    /// Uniform initialization in [-scale, scale].
    pub fn uniform(shape: &[usize], scale: f64, rng: &mut impl Rng) -> Tensor {
        let dist = Uniform::new_inclusive(-scale, scale);
        Tensor {
            shape: shape.to_vec(),
            data: (0..shape.iter().product()).map(|_| dist.sample(rng)).collect(),
        }
    }

    /// Zero tensor with the same shape as `self`.
    pub fn zeros_like(&self) -> Tensor {
        Tensor::zeros(&self.shape)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Number of rows of a 2-D tensor, or length of a 1-D tensor.
    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    /// Row width of a 2-D tensor.
    pub fn cols(&self) -> usize {
        match self.shape.len() {
            1 => 1,
            2 => self.shape[1],
            _ => panic!("cols() on tensor of rank {}", self.shape.len()),
        }
    }

    /// Row `r` of a 2-D tensor as a slice.
    pub fn row(&self, r: usize) -> &[f64] {
        let w = self.shape[1];
        &self.data[r * w..(r + 1) * w]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let w = self.shape[1];
        &mut self.data[r * w..(r + 1) * w]
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.shape[1] + c]
    }

    pub fn expect_shape(&self, shape: &[usize], what: &str) -> Result<()> {
        if self.shape != shape {
            return Err(Error::Shape(format!(
                "{what}: expected shape {shape:?}, got {:?}",
                self.shape
            )));
        }
        Ok(())
    }

    pub fn assert_finite(&self, what: &str) -> Result<()> {
        if let Some(pos) = self.data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "{what}: non-finite value {} at flat index {pos}",
                self.data[pos]
            )));
        }
        Ok(())
    }

    /// Matrix-vector product; `self` is M×N, `v` has length N.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let (m, n) = (self.shape[0], self.shape[1]);
        debug_assert_eq!(v.len(), n);
        let mut out = vec![0.0; m];
        for r in 0..m {
            let row = &self.data[r * n..(r + 1) * n];
            out[r] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// Transposed matrix-vector product; `self` is M×N, `v` has length M.
    pub fn matvec_t(&self, v: &[f64]) -> Vec<f64> {
        let (m, n) = (self.shape[0], self.shape[1]);
        debug_assert_eq!(v.len(), m);
        let mut out = vec![0.0; n];
        for r in 0..m {
            let row = &self.data[r * n..(r + 1) * n];
            for c in 0..n {
                out[c] += row[c] * v[r];
            }
        }
        out
    }

    /// Rank-1 update: `self += u ⊗ v` for an M×N tensor.
    pub fn add_outer(&mut self, u: &[f64], v: &[f64]) {
        let (m, n) = (self.shape[0], self.shape[1]);
        debug_assert_eq!(u.len(), m);
        debug_assert_eq!(v.len(), n);
        for r in 0..m {
            let row = &mut self.data[r * n..(r + 1) * n];
            for c in 0..n {
                row[c] += u[r] * v[c];
            }
        }
    }

    pub fn add_slice(&mut self, v: &[f64]) {
        debug_assert_eq!(self.data.len(), v.len());
        for (a, b) in self.data.iter_mut().zip(v) {
            *a += b;
        }
    }
}

/// Dot product of equal-length slices.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
