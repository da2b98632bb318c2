use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};

use super::{CoordinateCache, HessianOperator};
use crate::error::{check_dim, Result};

/// Explicit symmetric matrix (row-major). Used for synthetic instances and as
/// a test oracle; spectral bounds come from a full eigendecomposition.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    dim: usize,
    data: Vec<f64>,
    spectrum: OnceLock<(f64, f64)>,
}

impl DenseOperator {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        check_dim(dim * dim, data.len())?;
        Ok(Self {
            dim,
            data,
            spectrum: OnceLock::new(),
        })
    }

    /// Supplies known extreme eigenvalues instead of recomputing them.
    pub fn with_spectrum(self, bounds: (f64, f64)) -> Self {
        let _ = self.spectrum.set(bounds);
        self
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// `(lambda_min, lambda_max)`.
    pub fn spectrum(&self) -> (f64, f64) {
        *self.spectrum.get_or_init(|| {
            if self.dim == 0 {
                return (0.0, 0.0);
            }
            let m = DMatrix::from_row_slice(self.dim, self.dim, &self.data);
            let eig = SymmetricEigen::new(m).eigenvalues;
            let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        })
    }
}

impl HessianOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.data[i * d..(i + 1) * d].iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).collect()
    }

    fn norm_bound(&self) -> f64 {
        let (lo, hi) = self.spectrum();
        hi.max(-lo)
    }

    fn curvature_floor(&self) -> f64 {
        self.spectrum().0.max(0.0)
    }

    fn coordinate_cache(&self) -> Box<dyn CoordinateCache + '_> {
        Box::new(DenseCache {
            op: self,
            hp: vec![0.0; self.dim],
        })
    }

    fn column(&self, j: usize, out: &mut [f64]) {
        // symmetric: column j equals row j
        out.copy_from_slice(&self.data[j * self.dim..(j + 1) * self.dim]);
    }
}

struct DenseCache<'a> {
    op: &'a DenseOperator,
    hp: Vec<f64>,
}

impl CoordinateCache for DenseCache<'_> {
    fn hp(&self, j: usize) -> f64 {
        self.hp[j]
    }

    fn update(&mut self, j: usize, delta: f64) {
        let d = self.op.dim;
        for (h, a) in self.hp.iter_mut().zip(&self.op.data[j * d..(j + 1) * d]) {
            *h += delta * a;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_of_small_matrix() {
        let h = DenseOperator::new(2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let (lo, hi) = h.spectrum();
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 3.0).abs() < 1e-12);
        assert_eq!(h.diagonal(), vec![2.0, 2.0]);
    }
}
