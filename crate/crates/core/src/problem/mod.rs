//! Problem data: the smooth part `f`, its realizations, and the composite
//! objective `F = f + lambda * ||x||_1`.

mod libsvm;
mod logistic;
mod matrix;
mod synthetic;

pub use libsvm::{parse_libsvm, to_libsvm};
pub use logistic::{LogisticCurvature, LogisticLoss, LogisticProblem};
pub use matrix::SparseDesignMatrix;
pub use synthetic::QuadraticQuartic;

use crate::error::{check_dim, Result};
use crate::hessian_ops::HessianOperator;
use crate::linalg;
use crate::regularizer::{L1Regularizer, Regularizer};

/// A convex, continuously differentiable loss with a (generalized) Hessian.
pub trait SmoothFunction: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64], out: &mut [f64]);

    fn value_gradient(&self, x: &[f64], out: &mut [f64]) -> f64 {
        self.gradient(x, out);
        self.value(x)
    }

    /// The generalized Hessian at `x`, frozen as an operator.
    fn hessian_at<'a>(&'a self, x: &[f64]) -> Box<dyn HessianOperator + 'a>;

    fn hess_vec(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        self.hessian_at(x).apply(v, out);
    }

    /// Upper bound `L_hat` on the Lipschitz constant of the gradient.
    fn lipschitz_upper(&self) -> Result<f64>;

    /// Global lower bound on the Hessian spectrum (0 when unknown).
    fn curvature_floor(&self) -> f64 {
        0.0
    }
}

/// `F = f + Psi` with an l1 regularizer.
#[derive(Debug, Clone)]
pub struct CompositeProblem<F> {
    pub smooth: F,
    pub reg: L1Regularizer,
}

impl<F: SmoothFunction> CompositeProblem<F> {
    pub fn new(smooth: F, reg: L1Regularizer) -> Self {
        Self { smooth, reg }
    }

    pub fn dim(&self) -> usize {
        self.smooth.dim()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.smooth.value(x) + self.reg.value(x)
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        check_dim(self.dim(), x.len())
    }

    /// Identity-metric proximal-gradient displacement
    /// `prox_Psi(x - grad) - x`, whose norm is the termination measure.
    pub fn prox_gradient(&self, x: &[f64], grad: &[f64]) -> Vec<f64> {
        let v = linalg::sub(x, grad);
        let p = self.reg.prox(&v, 1.0).expect("unit step is positive");
        linalg::sub(&p, x)
    }

    /// First-order residual `dist(0, grad f(x) + dPsi(x))`.
    pub fn stationarity(&self, x: &[f64]) -> f64 {
        let mut g = vec![0.0; self.dim()];
        self.smooth.gradient(x, &mut g);
        self.reg.stationarity_residual(x, &g)
    }
}
