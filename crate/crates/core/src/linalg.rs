//! Dense iterates and sparse samples.
//!
//! Iterates are dense `ndarray` vectors because extrapolation and prox steps
//! touch every coordinate. Samples are stored sparsely.

use ndarray::Array1;

use crate::error::{require_dim, Error, Result};

/// Dense vector in R^N.
pub type Vector = Array1<f64>;

/// Sparse vector: strictly increasing 0-based indices with nonzero values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVector {
    /// Builds a sparse vector, dropping explicit zeros.
    ///
    /// Indices must be strictly increasing and values finite.
    pub fn new(indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: indices.len(),
                found: values.len(),
            });
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "sparse indices must be strictly increasing".into(),
            ));
        }
        if let Some(&v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "sparse value",
                value: v,
                reason: "must be finite",
            });
        }
        let (indices, values) = indices
            .into_iter()
            .zip(values)
            .filter(|&(_, v)| v != 0.0)
            .unzip();
        Ok(SparseVector { indices, values })
    }

    pub fn from_dense(dense: &Vector) -> Self {
        let (indices, values) = dense
            .iter()
            .enumerate()
            .filter(|&(_, &v)| v != 0.0)
            .map(|(i, &v)| (i, v))
            .unzip();
        SparseVector { indices, values }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// Smallest dimension that can hold this vector.
    pub fn min_dim(&self) -> usize {
        self.indices.last().map_or(0, |&i| i + 1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// `<self, dense>`; fails if an index falls outside `dense`.
    pub fn dot(&self, dense: &Vector) -> Result<f64> {
        if self.min_dim() > dense.len() {
            return Err(Error::DimensionMismatch {
                expected: self.min_dim(),
                found: dense.len(),
            });
        }
        Ok(self.dot_unchecked(dense))
    }

    /// Inner product without the bounds pre-check; panics on an out-of-range index.
    pub(crate) fn dot_unchecked(&self, dense: &Vector) -> f64 {
        self.iter().map(|(i, v)| v * dense[i]).sum()
    }

    /// `dense += alpha * self`.
    pub(crate) fn scaled_add_to(&self, alpha: f64, dense: &mut Vector) {
        for (i, v) in self.iter() {
            dense[i] += alpha * v;
        }
    }

    pub fn to_dense(&self, dim: usize) -> Result<Vector> {
        if self.min_dim() > dim {
            return Err(Error::DimensionMismatch {
                expected: self.min_dim(),
                found: dim,
            });
        }
        let mut out = Vector::zeros(dim);
        self.scaled_add_to(1.0, &mut out);
        Ok(out)
    }
}

/// Dense inner product with a dimension check.
pub fn dot(a: &Vector, b: &Vector) -> Result<f64> {
    require_dim(a.len(), b.len())?;
    Ok(a.dot(b))
}

pub fn norm(v: &Vector) -> f64 {
    v.dot(v).sqrt()
}

pub fn dist_sq(a: &Vector, b: &Vector) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn is_finite(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Percentage of exactly nonzero coordinates.
pub fn sparsity_pct(w: &Vector) -> f64 {
    if w.is_empty() {
        return 0.0;
    }
    let nnz = w.iter().filter(|&&x| x != 0.0).count();
    100.0 * nnz as f64 / w.len() as f64
}
