use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CompositeProblem, SmoothFunction, SparseDesignMatrix};
use crate::error::{check_dim, Error, Result};
use crate::hessian_ops::{CoordinateCache, HessianOperator};
use crate::linalg;

/// l1-regularized logistic regression.
pub type LogisticProblem = CompositeProblem<LogisticLoss>;

const POWER_ITERATIONS: usize = 100;
const POWER_SEED: u64 = 0x15_0a;
const POWER_SAFETY: f64 = 1.1;
const POWER_CONVERGED: f64 = 1e-3;

/// `f(x) = sum_i log(1 + exp(-b_i <a_i, x>))`.
#[derive(Debug, Clone)]
pub struct LogisticLoss {
    matrix: SparseDesignMatrix,
    labels: Vec<f64>,
    lipschitz: OnceLock<std::result::Result<f64, Error>>,
}

/// `log(1 + exp(-z))` without overflow.
#[inline]
pub(crate) fn log1p_exp_neg(z: f64) -> f64 {
    if z >= 0.0 {
        (-z).exp().ln_1p()
    } else {
        -z + z.exp().ln_1p()
    }
}

/// `1 / (1 + exp(-z))` without overflow.
#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticLoss {
    pub fn new(matrix: SparseDesignMatrix, labels: Vec<f64>) -> Result<Self> {
        check_dim(matrix.n_rows(), labels.len())?;
        if let Some(bad) = labels.iter().find(|&&b| b != 1.0 && b != -1.0) {
            return Err(Error::InvalidArgument(format!("label {bad} is not +1 or -1")));
        }
        Ok(Self {
            matrix,
            labels,
            lipschitz: OnceLock::new(),
        })
    }

    pub fn matrix(&self) -> &SparseDesignMatrix {
        &self.matrix
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// `b_i <a_i, x>` for every row.
    pub fn margins(&self, x: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.matrix.n_rows()];
        self.matrix.mul_vec(x, &mut z);
        for (zi, b) in z.iter_mut().zip(&self.labels) {
            *zi *= b;
        }
        z
    }

    pub fn f_value(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.value(x))
    }

    pub fn f_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        let mut g = vec![0.0; self.dim()];
        self.gradient(x, &mut g);
        Ok(g)
    }

    pub fn checked_hess_vec(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.dim(), v.len())?;
        let mut out = vec![0.0; self.dim()];
        self.hess_vec(x, v, &mut out);
        Ok(out)
    }

    fn estimate_lipschitz(&self) -> Result<f64> {
        let (n, d) = (self.matrix.n_rows(), self.matrix.n_cols());
        if n == 0 || d == 0 {
            return Err(Error::Degenerate("empty design matrix".into()));
        }
        let frob = self.matrix.frobenius_sq();
        if frob == 0.0 {
            return Err(Error::Degenerate("zero design matrix".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
        let mut v: Vec<f64> = (0..d).map(|_| rng.random::<f64>() + 0.5).collect();
        let nv = linalg::norm(&v);
        v.iter_mut().for_each(|e| *e /= nv);
        let mut av = vec![0.0; n];
        let mut w = vec![0.0; d];
        let mut estimate = 0.0;
        let mut rel_change = f64::INFINITY;
        for _ in 0..POWER_ITERATIONS {
            self.matrix.mul_vec(&v, &mut av);
            self.matrix.tmul_vec(&av, &mut w);
            let next = linalg::dot(&v, &w);
            let nw = linalg::norm(&w);
            if nw == 0.0 {
                break;
            }
            rel_change = (next - estimate).abs() / next.abs().max(f64::MIN_POSITIVE);
            estimate = next;
            for (vi, wi) in v.iter_mut().zip(&w) {
                *vi = wi / nw;
            }
        }
        let lambda_max = if rel_change <= POWER_CONVERGED {
            (POWER_SAFETY * estimate).min(frob)
        } else {
            frob
        };
        Ok(0.25 * lambda_max)
    }
}

impl SmoothFunction for LogisticLoss {
    fn dim(&self) -> usize {
        self.matrix.n_cols()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.margins(x).into_iter().map(log1p_exp_neg).sum()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        self.value_gradient(x, out);
    }

    fn value_gradient(&self, x: &[f64], out: &mut [f64]) -> f64 {
        let z = self.margins(x);
        let value = z.iter().map(|&zi| log1p_exp_neg(zi)).sum();
        let coef: Vec<f64> = z
            .iter()
            .zip(&self.labels)
            .map(|(&zi, &b)| -b * sigmoid(-zi))
            .collect();
        self.matrix.tmul_vec(&coef, out);
        value
    }

    fn hessian_at<'a>(&'a self, x: &[f64]) -> Box<dyn HessianOperator + 'a> {
        Box::new(LogisticCurvature::new(self, x))
    }

    fn lipschitz_upper(&self) -> Result<f64> {
        self.lipschitz.get_or_init(|| self.estimate_lipschitz()).clone()
    }
}

/// `A^T D A` with `D_ii = s_i (1 - s_i)`, `s_i = sigmoid(b_i <a_i, x>)`.
pub struct LogisticCurvature<'a> {
    loss: &'a LogisticLoss,
    weights: Vec<f64>,
    upper: f64,
}

impl<'a> LogisticCurvature<'a> {
    pub fn new(loss: &'a LogisticLoss, x: &[f64]) -> Self {
        let weights = loss
            .margins(x)
            .into_iter()
            .map(|z| {
                let s = sigmoid(z);
                s * (1.0 - s)
            })
            .collect();
        let upper = loss.lipschitz_upper().unwrap_or(f64::INFINITY);
        Self {
            loss,
            weights,
            upper,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl HessianOperator for LogisticCurvature<'_> {
    fn dim(&self) -> usize {
        self.loss.dim()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let a = &self.loss.matrix;
        let mut u = vec![0.0; a.n_rows()];
        a.mul_vec(v, &mut u);
        for (ui, w) in u.iter_mut().zip(&self.weights) {
            *ui *= w;
        }
        a.tmul_vec(&u, out);
    }

    fn diagonal(&self) -> Vec<f64> {
        let a = &self.loss.matrix;
        (0..a.n_cols())
            .map(|j| {
                let (rows, vals) = a.column(j);
                rows.iter()
                    .zip(vals)
                    .map(|(&i, &v)| self.weights[i] * v * v)
                    .sum()
            })
            .collect()
    }

    fn norm_bound(&self) -> f64 {
        self.upper
    }

    fn curvature_floor(&self) -> f64 {
        0.0
    }

    fn coordinate_cache(&self) -> Box<dyn CoordinateCache + '_> {
        Box::new(LogisticCoordinateCache {
            op: self,
            ap: vec![0.0; self.loss.matrix.n_rows()],
        })
    }
}

/// Tracks `A p` so that `(H p)_j` costs one column pass.
struct LogisticCoordinateCache<'a, 'b> {
    op: &'b LogisticCurvature<'a>,
    ap: Vec<f64>,
}

impl CoordinateCache for LogisticCoordinateCache<'_, '_> {
    fn hp(&self, j: usize) -> f64 {
        let (rows, vals) = self.op.loss.matrix.column(j);
        rows.iter()
            .zip(vals)
            .map(|(&i, &v)| v * self.op.weights[i] * self.ap[i])
            .sum()
    }

    fn update(&mut self, j: usize, delta: f64) {
        let (rows, vals) = self.op.loss.matrix.column(j);
        for (&i, &v) in rows.iter().zip(vals) {
            self.ap[i] += delta * v;
        }
    }
}
