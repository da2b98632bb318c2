//! LIBSVM text format: one example per line, `label idx:val idx:val ...`,
//! with 1-based strictly increasing indices. Blank lines are skipped.
//! No feature scaling is applied.

use std::fmt::Write as _;
use std::io::BufRead;

use super::SparseDesignMatrix;
use crate::error::{Error, Result};

/// Parses LIBSVM text. `n_features` overrides the column count inferred from
/// the largest index (it must not be smaller than that index).
pub fn parse_libsvm<R: BufRead>(
    reader: R,
    n_features: Option<usize>,
) -> Result<(SparseDesignMatrix, Vec<f64>)> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut max_index = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_ascii_whitespace();
        let label_tok = tokens.next().unwrap_or_default();
        labels.push(parse_label(label_tok).ok_or_else(|| Error::Parse {
            line: lineno,
            message: format!("label {label_tok:?} is not +1 or -1"),
        })?);
        let mut row = Vec::new();
        let mut prev = 0usize;
        for tok in tokens {
            let (idx, val) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: lineno,
                message: format!("malformed token {tok:?}"),
            })?;
            let idx: usize = idx.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("bad index in {tok:?}"),
            })?;
            let val: f64 = val.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("bad value in {tok:?}"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line: lineno,
                    message: "indices are 1-based".into(),
                });
            }
            if idx <= prev {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("index {idx} does not increase (previous {prev})"),
                });
            }
            if !val.is_finite() {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("non-finite value in {tok:?}"),
                });
            }
            prev = idx;
            max_index = max_index.max(idx);
            if val != 0.0 {
                row.push((idx - 1, val));
            }
        }
        rows.push(row);
    }
    let n_cols = match n_features {
        Some(n) if n < max_index => {
            return Err(Error::InvalidArgument(format!(
                "feature override {n} is smaller than the largest index {max_index}"
            )))
        }
        Some(n) => n,
        None => max_index,
    };
    let matrix = SparseDesignMatrix::from_rows(n_cols, &rows)?;
    Ok((matrix, labels))
}

fn parse_label(tok: &str) -> Option<f64> {
    match tok {
        "+1" | "1" | "1.0" | "+1.0" => Some(1.0),
        "-1" | "-1.0" => Some(-1.0),
        _ => None,
    }
}

/// Writes the matrix and labels back in LIBSVM form. Values use Rust's
/// shortest round-trip float formatting, so parsing the output reproduces the
/// in-memory representation exactly.
pub fn to_libsvm(matrix: &SparseDesignMatrix, labels: &[f64]) -> String {
    let mut out = String::new();
    for (r, &label) in labels.iter().enumerate().take(matrix.n_rows()) {
        out.push_str(if label > 0.0 { "+1" } else { "-1" });
        let (cols, vals) = matrix.row(r);
        for (c, v) in cols.iter().zip(vals) {
            let _ = write!(out, " {}:{}", c + 1, v);
        }
        out.push('\n');
    }
    out
}
