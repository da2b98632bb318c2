//! The nonsmooth term `Psi` and its l1 realization.
//!
//! All proximal maps produce exact zeros, and [`SupportPattern`] uses exact
//! zero tests. Upstream steps rely on that contract: a coordinate is on the
//! active manifold only if it is exactly zero.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{sign, soft_threshold};

/// Interface a regularizer exposes to the solver. Only l1 ships.
pub trait Regularizer: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;

    /// `argmin_y 1/(2 tau) ||y - v||^2 + Psi(y)`
    fn prox(&self, v: &[f64], tau: f64) -> Result<Vec<f64>>;

    /// Proximal map in the metric `diag(diag)`:
    /// `argmin_y 1/2 ||y - v||^2_diag + Psi(y)`.
    fn prox_diag(&self, v: &[f64], diag: &[f64]) -> Result<Vec<f64>>;

    /// `dist(0, g + dPsi(x))`.
    fn stationarity_residual(&self, x: &[f64], g: &[f64]) -> f64;

    /// The manifold through `x` on which `Psi` is smooth.
    fn manifold(&self, x: &[f64]) -> SupportPattern;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L1Regularizer {
    lambda: f64,
}

impl L1Regularizer {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda > 0.0 && lambda.is_finite() {
            Ok(Self { lambda })
        } else {
            Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")))
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Per-coordinate residual `r_i` of `dist(0, g + dPsi(x))`.
    #[inline]
    pub fn residual_coord(&self, xi: f64, gi: f64) -> f64 {
        if xi != 0.0 {
            gi + self.lambda * sign(xi)
        } else {
            sign(gi) * (gi.abs() - self.lambda).max(0.0)
        }
    }
}

impl Regularizer for L1Regularizer {
    fn value(&self, x: &[f64]) -> f64 {
        self.lambda * x.iter().map(|v| v.abs()).sum::<f64>()
    }

    fn prox(&self, v: &[f64], tau: f64) -> Result<Vec<f64>> {
        if !(tau > 0.0) {
            return Err(Error::InvalidArgument(format!("prox step must be positive, got {tau}")));
        }
        let t = tau * self.lambda;
        Ok(v.iter().map(|&vi| soft_threshold(vi, t)).collect())
    }

    fn prox_diag(&self, v: &[f64], diag: &[f64]) -> Result<Vec<f64>> {
        check_dim(v.len(), diag.len())?;
        if let Some(bad) = diag.iter().find(|&&d| !(d > 0.0)) {
            return Err(Error::InvalidArgument(format!("metric entry {bad} is not positive")));
        }
        Ok(v.iter()
            .zip(diag)
            .map(|(&vi, &di)| soft_threshold(vi, self.lambda / di))
            .collect())
    }

    fn stationarity_residual(&self, x: &[f64], g: &[f64]) -> f64 {
        x.iter()
            .zip(g)
            .map(|(&xi, &gi)| self.residual_coord(xi, gi).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn manifold(&self, x: &[f64]) -> SupportPattern {
        SupportPattern::of(x)
    }
}

/// Zero set `I_x = {i : x_i = 0}` identifying the l1 manifold
/// `M_x = {y : y_i = 0 for i in I_x}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SupportPattern {
    zero_set: Vec<usize>,
    dimension: usize,
}

impl SupportPattern {
    pub fn of(x: &[f64]) -> Self {
        Self {
            zero_set: (0..x.len()).filter(|&i| x[i] == 0.0).collect(),
            dimension: x.len(),
        }
    }

    pub fn from_zero_set(mut zero_set: Vec<usize>, dimension: usize) -> Result<Self> {
        zero_set.sort_unstable();
        zero_set.dedup();
        if zero_set.last().is_some_and(|&i| i >= dimension) {
            return Err(Error::InvalidArgument("zero index out of range".into()));
        }
        Ok(Self { zero_set, dimension })
    }

    pub fn zero_set(&self) -> &[usize] {
        &self.zero_set
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Number of free (nonzero) coordinates, i.e. the manifold dimension.
    pub fn nnz(&self) -> usize {
        self.dimension - self.zero_set.len()
    }

    /// Sorted complement of the zero set.
    pub fn free_indices(&self) -> Vec<usize> {
        let mut free = Vec::with_capacity(self.nnz());
        let mut z = self.zero_set.iter().peekable();
        for i in 0..self.dimension {
            if z.peek() == Some(&&i) {
                z.next();
            } else {
                free.push(i);
            }
        }
        free
    }
}

/// Convenience wrapper: `manifold_of(x)`.
pub fn manifold_of(x: &[f64]) -> SupportPattern {
    SupportPattern::of(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn l1(lambda: f64) -> L1Regularizer {
        L1Regularizer::new(lambda).unwrap()
    }

    #[test]
    fn values() {
        assert!((l1(1.0).value(&[2.0, -0.3, 0.0]) - 2.3).abs() < 1e-15);
        assert_eq!(l1(0.5).value(&[0.0, 0.0]), 0.0);
        assert_eq!(l1(2.0).value(&[-1.0, 1.0]), 4.0);
        assert!(L1Regularizer::new(0.0).is_err());
        assert!(L1Regularizer::new(-1.0).is_err());
    }

    #[test]
    fn prox_soft_thresholds() {
        assert_eq!(l1(1.0).prox(&[2.0, -0.3, 0.5], 0.5).unwrap(), vec![1.5, 0.0, 0.0]);
        let v = [0.3, -4.0, 1e-300];
        assert_eq!(l1(1.0).prox(&v, 1e-320).unwrap(), v.to_vec());
        assert!(l1(1.0).prox(&v, 0.0).is_err());
    }

    #[test]
    fn prox_minimizes_1d_objective_on_grid() {
        let r = l1(0.7);
        for &(v, tau) in &[(1.3, 0.4), (-0.2, 2.0), (0.9, 1.0), (-3.0, 0.25)] {
            let y = r.prox(&[v], tau).unwrap()[0];
            let obj = |z: f64| 0.5 / tau * (z - v) * (z - v) + 0.7 * z.abs();
            // closed form check: y is within the 1e-10 of every grid value's minimum
            let best = (-40000..=40000)
                .map(|k| obj(k as f64 * 1e-4))
                .fold(f64::INFINITY, f64::min);
            assert!(obj(y) <= best + 1e-10, "v={v} tau={tau}");
        }
    }

    #[test]
    fn prox_diag_cases() {
        let r = l1(1.0);
        assert_eq!(r.prox_diag(&[1.0, 1.0], &[2.0, 4.0]).unwrap(), vec![0.5, 0.75]);
        assert_eq!(r.prox_diag(&[0.0, 0.0], &[2.0, 4.0]).unwrap(), vec![0.0, 0.0]);
        let v = [0.3, -2.0, 5.0];
        assert_eq!(r.prox_diag(&v, &[2.0; 3]).unwrap(), r.prox(&v, 0.5).unwrap());
        assert!(r.prox_diag(&v, &[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn residual_cases() {
        let r = l1(1.0);
        let res = r.stationarity_residual(&[0.0, 0.0, 0.5], &[0.2, 1.5, -2.0]);
        assert!((res - 1.25f64.sqrt()).abs() < 1e-15);
        // Example 1 solution (2, 0): grad = (2(2-2.5), 2(0-0.3)) = (-1, -0.6)
        assert_eq!(r.stationarity_residual(&[2.0, 0.0], &[-1.0, -0.6]), 0.0);
        assert_eq!(l1(3.0).stationarity_residual(&[0.0; 2], &[2.0, -2.9]), 0.0);
    }

    #[test]
    fn manifold_cases() {
        assert_eq!(manifold_of(&[2.0, 0.0, -1.0]).zero_set(), &[1]);
        assert_eq!(manifold_of(&[0.0; 3]).zero_set(), &[0, 1, 2]);
        let v = [0.5, -0.2, 0.1];
        let p = l1(1.0).prox(&v, 1.0).unwrap();
        assert_eq!(manifold_of(&p).zero_set(), &[0, 1, 2]);
        assert_eq!(manifold_of(&[1.0, 0.0, 3.0]).free_indices(), vec![0, 2]);
    }

    /// Brute-force first-order check: each coordinate must satisfy the
    /// subgradient interval condition.
    fn is_stationary(lambda: f64, x: &[f64], g: &[f64]) -> bool {
        x.iter().zip(g).all(|(&xi, &gi)| {
            if xi > 0.0 {
                gi == -lambda
            } else if xi < 0.0 {
                gi == lambda
            } else {
                -lambda <= gi && gi <= lambda
            }
        })
    }

    proptest! {
        #[test]
        fn prox_is_nonexpansive(v1 in prop::collection::vec(-5.0..5.0f64, 6),
                                 v2 in prop::collection::vec(-5.0..5.0f64, 6),
                                 tau in 0.01..3.0f64) {
            let r = l1(0.8);
            let (p1, p2) = (r.prox(&v1, tau).unwrap(), r.prox(&v2, tau).unwrap());
            prop_assert!(crate::linalg::dist(&p1, &p2) <= crate::linalg::dist(&v1, &v2) + 1e-15);
            for (pi, vi) in p1.iter().zip(&v1) {
                prop_assert!(*vi != 0.0 || *pi == 0.0);
            }
        }

        #[test]
        fn residual_zero_iff_stationary(x in prop::collection::vec(prop_oneof![Just(0.0), -2.0..2.0f64], 5),
                                         g in prop::collection::vec(prop_oneof![Just(1.0), Just(-1.0), -2.0..2.0f64], 5)) {
            let r = l1(1.0);
            prop_assert_eq!(r.stationarity_residual(&x, &g) == 0.0, is_stationary(1.0, &x, &g));
        }

        #[test]
        fn manifold_invariant_under_positive_scaling(x in prop::collection::vec(prop_oneof![Just(0.0), -2.0..2.0f64], 8),
                                                     s in 0.1..10.0f64) {
            let scaled: Vec<f64> = x.iter().map(|v| v * s).collect();
            prop_assert_eq!(manifold_of(&x), manifold_of(&scaled));
        }
    }
}
