use crate::error::{check_dim, Error, Result};
use crate::parallel::Parallelism;
#[cfg(feature = "parallel")]
use crate::parallel::{MIN_PARALLEL_NNZ, REDUCTION_CHUNKS};

/// Compressed row-sparse `n_rows x n_cols` matrix.
///
/// Column indices inside a row are strictly increasing and no explicit zeros
/// are stored. A column-major copy of the pattern is kept alongside for
/// coordinate-wise access.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDesignMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
    // CSC mirror: col_offsets[j]..col_offsets[j+1] index into col_rows/col_values
    col_offsets: Vec<usize>,
    col_rows: Vec<usize>,
    col_values: Vec<f64>,
    parallelism: Parallelism,
}

impl SparseDesignMatrix {
    /// Builds a matrix from CSR arrays, validating every structural invariant.
    /// Explicit zeros are dropped.
    pub fn from_csr(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != n_rows + 1 {
            return Err(Error::InvalidArgument(format!(
                "row_offsets has length {}, expected {}",
                row_offsets.len(),
                n_rows + 1
            )));
        }
        if row_offsets[0] != 0 || row_offsets[n_rows] != col_indices.len() {
            return Err(Error::InvalidArgument("row_offsets must span [0, nnz]".into()));
        }
        check_dim(col_indices.len(), values.len())?;
        let mut offsets = Vec::with_capacity(n_rows + 1);
        let mut cols = Vec::with_capacity(col_indices.len());
        let mut vals = Vec::with_capacity(values.len());
        offsets.push(0);
        for r in 0..n_rows {
            let (lo, hi) = (row_offsets[r], row_offsets[r + 1]);
            if hi < lo {
                return Err(Error::InvalidArgument(format!("row_offsets decrease at row {r}")));
            }
            let mut prev: Option<usize> = None;
            for k in lo..hi {
                let c = col_indices[k];
                if c >= n_cols {
                    return Err(Error::InvalidArgument(format!(
                        "column index {c} out of range in row {r}"
                    )));
                }
                if prev.is_some_and(|p| p >= c) {
                    return Err(Error::InvalidArgument(format!(
                        "column indices not strictly increasing in row {r}"
                    )));
                }
                prev = Some(c);
                if !values[k].is_finite() {
                    return Err(Error::InvalidArgument(format!("non-finite value in row {r}")));
                }
                if values[k] != 0.0 {
                    cols.push(c);
                    vals.push(values[k]);
                }
            }
            offsets.push(cols.len());
        }
        Ok(Self::assemble(n_rows, n_cols, offsets, cols, vals))
    }

    /// Builds from rows of `(column, value)` pairs (0-based, strictly increasing).
    pub fn from_rows(n_cols: usize, rows: &[Vec<(usize, f64)>]) -> Result<Self> {
        let mut offsets = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for row in rows {
            for &(c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            offsets.push(cols.len());
        }
        Self::from_csr(rows.len(), n_cols, offsets, cols, vals)
    }

    /// Dense row-major input; zeros are not stored.
    pub fn from_dense(n_rows: usize, n_cols: usize, data: &[f64]) -> Result<Self> {
        check_dim(n_rows * n_cols, data.len())?;
        let rows: Vec<Vec<(usize, f64)>> = (0..n_rows)
            .map(|r| {
                (0..n_cols)
                    .filter_map(|c| {
                        let v = data[r * n_cols + c];
                        (v != 0.0).then_some((c, v))
                    })
                    .collect()
            })
            .collect();
        Self::from_rows(n_cols, &rows)
    }

    fn assemble(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        let mut counts = vec![0usize; n_cols + 1];
        for &c in &col_indices {
            counts[c + 1] += 1;
        }
        for j in 0..n_cols {
            counts[j + 1] += counts[j];
        }
        let col_offsets = counts.clone();
        let mut fill = counts;
        let mut col_rows = vec![0usize; col_indices.len()];
        let mut col_values = vec![0.0; col_indices.len()];
        for r in 0..n_rows {
            for k in row_offsets[r]..row_offsets[r + 1] {
                let c = col_indices[k];
                let dst = fill[c];
                col_rows[dst] = r;
                col_values[dst] = values[k];
                fill[c] += 1;
            }
        }
        Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
            col_offsets,
            col_rows,
            col_values,
            parallelism: Parallelism::Sequential,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn parallelism(&self) -> Parallelism {
        self.parallelism
    }

    pub fn set_parallelism(&mut self, p: Parallelism) {
        self.parallelism = p;
    }

    pub fn with_parallelism(mut self, p: Parallelism) -> Self {
        self.parallelism = p;
        self
    }

    /// Entries of row `r` as parallel slices `(columns, values)`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_offsets[r], self.row_offsets[r + 1]);
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    /// Entries of column `c` as parallel slices `(rows, values)`.
    pub fn column(&self, c: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.col_offsets[c], self.col_offsets[c + 1]);
        (&self.col_rows[lo..hi], &self.col_values[lo..hi])
    }

    #[inline]
    pub fn row_dot(&self, r: usize, x: &[f64]) -> f64 {
        let (cols, vals) = self.row(r);
        cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum()
    }

    /// `out = A x`
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(out.len(), self.n_rows);
        #[cfg(feature = "parallel")]
        if self.use_parallel() {
            use rayon::prelude::*;
            out.par_iter_mut().enumerate().for_each(|(r, o)| *o = self.row_dot(r, x));
            return;
        }
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.row_dot(r, x);
        }
    }

    /// `out = A^T v`
    pub fn tmul_vec(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.n_rows);
        debug_assert_eq!(out.len(), self.n_cols);
        #[cfg(feature = "parallel")]
        if self.use_parallel() {
            self.tmul_vec_chunked(v, out);
            return;
        }
        out.iter_mut().for_each(|o| *o = 0.0);
        self.tmul_accumulate(0..self.n_rows, v, out);
    }

    fn tmul_accumulate(&self, rows: std::ops::Range<usize>, v: &[f64], out: &mut [f64]) {
        for r in rows {
            let w = v[r];
            if w == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(r);
            for (&c, &a) in cols.iter().zip(vals) {
                out[c] += w * a;
            }
        }
    }

    #[cfg(feature = "parallel")]
    fn tmul_vec_chunked(&self, v: &[f64], out: &mut [f64]) {
        use rayon::prelude::*;
        let chunk = self.n_rows.div_ceil(REDUCTION_CHUNKS).max(1);
        let partials: Vec<Vec<f64>> = (0..self.n_rows.div_ceil(chunk))
            .into_par_iter()
            .map(|k| {
                let mut acc = vec![0.0; self.n_cols];
                let hi = ((k + 1) * chunk).min(self.n_rows);
                self.tmul_accumulate(k * chunk..hi, v, &mut acc);
                acc
            })
            .collect();
        out.iter_mut().for_each(|o| *o = 0.0);
        for p in &partials {
            for (o, a) in out.iter_mut().zip(p) {
                *o += a;
            }
        }
    }

    #[cfg(feature = "parallel")]
    fn use_parallel(&self) -> bool {
        self.parallelism.is_parallel() && self.nnz() >= MIN_PARALLEL_NNZ
    }

    /// Squared Euclidean norm of every column.
    pub fn column_sq_norms(&self) -> Vec<f64> {
        (0..self.n_cols)
            .map(|c| self.column(c).1.iter().map(|v| v * v).sum())
            .collect()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// First `n` rows as a new matrix with the same column count.
    pub fn head_rows(&self, n: usize) -> Self {
        let n = n.min(self.n_rows);
        let nnz = self.row_offsets[n];
        Self::assemble(
            n,
            self.n_cols,
            self.row_offsets[..=n].to_vec(),
            self.col_indices[..nnz].to_vec(),
            self.values[..nnz].to_vec(),
        )
        .with_parallelism(self.parallelism)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> SparseDesignMatrix {
        SparseDesignMatrix::from_rows(3, &[vec![(0, 0.5), (2, -2.0)], vec![(1, 1.0)]]).unwrap()
    }

    #[test]
    fn products_match_dense() {
        let a = toy();
        let mut out = vec![0.0; 2];
        a.mul_vec(&[1.0, 2.0, 3.0], &mut out);
        assert_eq!(out, vec![0.5 - 6.0, 2.0]);
        let mut t = vec![0.0; 3];
        a.tmul_vec(&[1.0, -1.0], &mut t);
        assert_eq!(t, vec![0.5, -1.0, -2.0]);
    }

    #[test]
    fn explicit_zeros_are_dropped() {
        let a = SparseDesignMatrix::from_rows(2, &[vec![(0, 0.0), (1, 3.0)]]).unwrap();
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.row(0), (&[1usize][..], &[3.0][..]));
    }

    #[test]
    fn rejects_bad_structure() {
        assert!(SparseDesignMatrix::from_rows(2, &[vec![(1, 1.0), (0, 1.0)]]).is_err());
        assert!(SparseDesignMatrix::from_rows(2, &[vec![(2, 1.0)]]).is_err());
        assert!(SparseDesignMatrix::from_csr(1, 1, vec![0, 2], vec![0], vec![1.0]).is_err());
    }

    #[test]
    fn column_view_matches_rows() {
        let a = toy();
        assert_eq!(a.column(2), (&[0usize][..], &[-2.0][..]));
        assert_eq!(a.column_sq_norms(), vec![0.25, 1.0, 4.0]);
    }

    #[test]
    fn parallel_transpose_agrees_with_sequential() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<(usize, f64)>> = (0..4000)
            .map(|_| {
                let mut row = Vec::new();
                for c in 0..50 {
                    if rng.random::<f64>() < 0.2 {
                        row.push((c, rng.random::<f64>() - 0.5));
                    }
                }
                row
            })
            .collect();
        let seq = SparseDesignMatrix::from_rows(50, &rows).unwrap();
        let par = seq.clone().with_parallelism(Parallelism::Rows);
        let v: Vec<f64> = (0..4000).map(|i| ((i * 7) % 13) as f64 - 6.0).collect();
        let (mut a, mut b) = (vec![0.0; 50], vec![0.0; 50]);
        seq.tmul_vec(&v, &mut a);
        par.tmul_vec(&v, &mut b);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
        let x: Vec<f64> = (0..50).map(|i| i as f64 * 0.01).collect();
        let (mut p, mut q) = (vec![0.0; 4000], vec![0.0; 4000]);
        seq.mul_vec(&x, &mut p);
        par.mul_vec(&x, &mut q);
        assert_eq!(p, q);
    }
}
