//! Dataset sources for desk-scale runs.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problem::{parse_libsvm, SparseDesignMatrix};

/// Environment variable pointing at a real a9a file in LIBSVM format.
pub const A9A_PATH_ENV: &str = "ISQA_A9A_PATH";

pub const A9A_FEATURES: usize = 123;

/// Category counts of the one-hot groups; they sum to [`A9A_FEATURES`] and a
/// row has one active feature per group, so 14 nonzeros like a9a.
const GROUPS: [usize; 14] = [5, 8, 16, 16, 7, 14, 6, 5, 2, 2, 3, 3, 5, 31];

/// Binary one-hot rows with a9a's shape (123 features, 14 ones per row,
/// about a quarter positive labels). Category frequencies are skewed and the
/// labels follow a sparse logistic model with label noise.
pub fn a9a_like(n_rows: usize, seed: u64) -> (SparseDesignMatrix, Vec<f64>) {
    debug_assert_eq!(GROUPS.iter().sum::<usize>(), A9A_FEATURES);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut offsets = Vec::with_capacity(GROUPS.len());
    let mut start = 0;
    for g in GROUPS {
        offsets.push(start);
        start += g;
    }
    let weights: Vec<Vec<f64>> = GROUPS
        .iter()
        .map(|&g| (0..g).map(|k| 1.0 / (1.0 + k as f64).powf(1.2) * (0.5 + rng.random::<f64>())).collect())
        .collect();
    let truth: Vec<f64> = (0..A9A_FEATURES)
        .map(|_| if rng.random::<f64>() < 0.4 { 2.0 * rng.random::<f64>() - 1.0 } else { 0.0 })
        .collect();
    let mut rows = Vec::with_capacity(n_rows);
    let mut labels = Vec::with_capacity(n_rows);
    for _ in 0..n_rows {
        let mut row = Vec::with_capacity(GROUPS.len());
        let mut z = -1.6;
        for (gi, w) in weights.iter().enumerate() {
            let total: f64 = w.iter().sum();
            let mut u = rng.random::<f64>() * total;
            let mut k = 0;
            while k + 1 < w.len() && u >= w[k] {
                u -= w[k];
                k += 1;
            }
            let col = offsets[gi] + k;
            row.push((col, 1.0));
            z += 1.5 * truth[col];
        }
        let prob = 1.0 / (1.0 + (-z).exp());
        labels.push(if rng.random::<f64>() < prob { 1.0 } else { -1.0 });
        rows.push(row);
    }
    let matrix = SparseDesignMatrix::from_rows(A9A_FEATURES, &rows).expect("indices are in range");
    (matrix, labels)
}

/// First `n_rows` rows of a LIBSVM file, padded to `n_features` columns.
pub fn load_head(path: &Path, n_rows: usize, n_features: Option<usize>) -> Result<(SparseDesignMatrix, Vec<f64>)> {
    let file = File::open(path).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
    let (m, labels) = parse_libsvm(BufReader::new(file), n_features)?;
    let n = n_rows.min(m.n_rows());
    Ok((m.head_rows(n), labels[..n].to_vec()))
}

/// Real a9a rows when [`A9A_PATH_ENV`] is set, else [`a9a_like`].
pub fn a9a_subset(n_rows: usize, seed: u64) -> Result<(SparseDesignMatrix, Vec<f64>, String)> {
    match std::env::var_os(A9A_PATH_ENV) {
        Some(path) => {
            let path = Path::new(&path);
            let (m, l) = load_head(path, n_rows, Some(A9A_FEATURES))?;
            Ok((m, l, path.display().to_string()))
        }
        None => {
            let (m, l) = a9a_like(n_rows, seed);
            Ok((m, l, format!("a9a-like(n={n_rows}, seed={seed})")))
        }
    }
}
