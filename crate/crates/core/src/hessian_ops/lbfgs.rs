use std::collections::VecDeque;

use nalgebra::{DMatrix, SymmetricEigen};

use super::{CoordinateCache, HessianOperator};
use crate::linalg::dot;

pub const DEFAULT_MEMORY: usize = 10;
pub const DEFAULT_SAFEGUARD: f64 = 1e-10;

/// Limited-memory BFGS Hessian approximation in compact form
///
/// `B = gamma I - W N^{-1} W^T`, `W = [gamma S, Y]`,
/// `N = [[gamma S^T S, L], [L^T, -D]]`
///
/// where `L` is the strictly lower part of `S^T Y` and `D` its diagonal.
/// Pairs are accepted only when `<s, y> > delta <s, s>`.
#[derive(Debug, Clone)]
pub struct LbfgsOperator {
    dim: usize,
    memory: usize,
    safeguard: f64,
    pairs: VecDeque<(Vec<f64>, Vec<f64>)>,
    gamma: f64,
    rejected: usize,
    // cached factors, rebuilt on every accepted update
    w: Vec<Vec<f64>>,
    w_hat: Vec<Vec<f64>>,
    middle: DMatrix<f64>,
    bounds: (f64, f64),
}

impl LbfgsOperator {
    pub fn new(dim: usize) -> Self {
        Self::with_params(dim, DEFAULT_MEMORY, DEFAULT_SAFEGUARD)
    }

    pub fn with_params(dim: usize, memory: usize, safeguard: f64) -> Self {
        assert!(memory > 0, "L-BFGS memory must be positive");
        assert!(safeguard > 0.0, "safeguard must be positive");
        Self {
            dim,
            memory,
            safeguard,
            pairs: VecDeque::with_capacity(memory),
            gamma: 1.0,
            rejected: 0,
            w: Vec::new(),
            w_hat: Vec::new(),
            middle: DMatrix::zeros(0, 0),
            bounds: (1.0, 1.0),
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn rejected(&self) -> usize {
        self.rejected
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&[f64], &[f64])> {
        self.pairs.iter().map(|(s, y)| (s.as_slice(), y.as_slice()))
    }

    /// Offers a curvature pair; returns whether it was stored.
    pub fn update(&mut self, s: &[f64], y: &[f64]) -> bool {
        assert_eq!(s.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        let sy = dot(s, y);
        let ss = dot(s, s);
        if !(sy > self.safeguard * ss) || !sy.is_finite() || ss == 0.0 {
            self.rejected += 1;
            return false;
        }
        if self.pairs.len() == self.memory {
            self.pairs.pop_front();
        }
        self.gamma = dot(y, y) / sy;
        self.pairs.push_back((s.to_vec(), y.to_vec()));
        self.rebuild();
        true
    }

    fn rebuild(&mut self) {
        let k = self.pairs.len();
        let g = self.gamma;
        let mut n = DMatrix::zeros(2 * k, 2 * k);
        for (i, (si, yi)) in self.pairs.iter().enumerate() {
            for (j, (sj, yj)) in self.pairs.iter().enumerate() {
                n[(i, j)] = g * dot(si, sj);
                if i > j {
                    let l = dot(si, yj);
                    n[(i, k + j)] = l;
                    n[(k + j, i)] = l;
                }
            }
            n[(k + i, k + i)] = -dot(si, yi);
        }
        let middle = match n.clone().try_inverse() {
            Some(m) => m,
            None => {
                // Numerically singular: fall back to the scaled identity.
                self.pairs.clear();
                self.w.clear();
                self.w_hat.clear();
                self.middle = DMatrix::zeros(0, 0);
                self.bounds = (self.gamma, self.gamma);
                return;
            }
        };
        let middle = (&middle + middle.transpose()) * 0.5;
        let mut w: Vec<Vec<f64>> = self.pairs.iter().map(|(s, _)| s.iter().map(|v| g * v).collect()).collect();
        w.extend(self.pairs.iter().map(|(_, y)| y.clone()));
        let w_hat: Vec<Vec<f64>> = (0..2 * k)
            .map(|a| {
                let mut col = vec![0.0; self.dim];
                for b in 0..2 * k {
                    let m = middle[(b, a)];
                    for (c, wv) in col.iter_mut().zip(&w[b]) {
                        *c += m * wv;
                    }
                }
                col
            })
            .collect();
        self.bounds = spectral_bounds(g, &w, &middle);
        self.w = w;
        self.w_hat = w_hat;
        self.middle = middle;
    }
}

/// Extreme eigenvalues of `gamma I - W M W^T`, computed through the
/// `2k x 2k` matrix `G^{1/2} M G^{1/2}` with `G = W^T W`. The value `gamma`
/// is always included, which can only widen the interval.
fn spectral_bounds(gamma: f64, w: &[Vec<f64>], middle: &DMatrix<f64>) -> (f64, f64) {
    let r = w.len();
    let gram = DMatrix::from_fn(r, r, |i, j| dot(&w[i], &w[j]));
    let eg = SymmetricEigen::new(gram);
    let sqrt_vals = eg.eigenvalues.map(|v| v.max(0.0).sqrt());
    let root = &eg.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * eg.eigenvectors.transpose();
    let core = &root * middle * &root;
    let core = (&core + core.transpose()) * 0.5;
    let vals = SymmetricEigen::new(core).eigenvalues;
    let mut lo = gamma;
    let mut hi = gamma;
    for v in vals.iter() {
        lo = lo.min(gamma - v);
        hi = hi.max(gamma - v);
    }
    (lo.max(0.0), hi)
}

impl HessianOperator for LbfgsOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        for (o, x) in out.iter_mut().zip(v) {
            *o = self.gamma * x;
        }
        // out -= W_hat (W^T v)
        for (wa, wha) in self.w.iter().zip(&self.w_hat) {
            let z = dot(wa, v);
            if z != 0.0 {
                for (o, h) in out.iter_mut().zip(wha) {
                    *o -= z * h;
                }
            }
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|j| {
                self.gamma
                    - self
                        .w
                        .iter()
                        .zip(&self.w_hat)
                        .map(|(wa, wha)| wa[j] * wha[j])
                        .sum::<f64>()
            })
            .collect()
    }

    fn norm_bound(&self) -> f64 {
        self.bounds.1
    }

    fn curvature_floor(&self) -> f64 {
        self.bounds.0
    }

    fn coordinate_cache(&self) -> Box<dyn CoordinateCache + '_> {
        Box::new(LbfgsCache {
            op: self,
            p: vec![0.0; self.dim],
            wtp: vec![0.0; self.w.len()],
        })
    }

    fn column(&self, j: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        out[j] = self.gamma;
        for (wa, wha) in self.w.iter().zip(&self.w_hat) {
            let z = wa[j];
            if z != 0.0 {
                for (o, h) in out.iter_mut().zip(wha) {
                    *o -= z * h;
                }
            }
        }
    }
}

/// Keeps `W^T p` so that `(B p)_j = gamma p_j - W_hat[j, :] . (W^T p)` costs `O(k)`.
struct LbfgsCache<'a> {
    op: &'a LbfgsOperator,
    p: Vec<f64>,
    wtp: Vec<f64>,
}

impl CoordinateCache for LbfgsCache<'_> {
    fn hp(&self, j: usize) -> f64 {
        let corr: f64 = self.op.w_hat.iter().zip(&self.wtp).map(|(wh, z)| wh[j] * z).sum();
        self.op.gamma * self.p[j] - corr
    }

    fn update(&mut self, j: usize, delta: f64) {
        self.p[j] += delta;
        for (z, wa) in self.wtp.iter_mut().zip(&self.op.w) {
            *z += delta * wa[j];
        }
    }
}
