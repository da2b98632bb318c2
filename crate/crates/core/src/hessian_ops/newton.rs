use super::{CoordinateCache, HessianOperator};
use crate::linalg;
use crate::problem::{CompositeProblem, SmoothFunction};
use crate::regularizer::Regularizer;

pub const DEFAULT_C: f64 = 1e-6;
pub const DEFAULT_RHO: f64 = 0.5;

/// `H = hess f(x) + c ||x - prox_Psi(x - grad f(x))||^rho I`.
///
/// The damping vanishes exactly at stationary points.
pub struct DampedNewtonOperator<'a> {
    curvature: Box<dyn HessianOperator + 'a>,
    damping: f64,
}

impl<'a> DampedNewtonOperator<'a> {
    /// `grad` must be `grad f(x)`.
    pub fn new<F: SmoothFunction>(
        problem: &'a CompositeProblem<F>,
        x: &[f64],
        grad: &[f64],
        c: f64,
        rho: f64,
    ) -> Self {
        let v = linalg::sub(x, grad);
        let p = problem.reg.prox(&v, 1.0).expect("unit step");
        let residual = linalg::dist(x, &p);
        Self::from_parts(problem.smooth.hessian_at(x), c * residual.powf(rho))
    }

    pub fn from_parts(curvature: Box<dyn HessianOperator + 'a>, damping: f64) -> Self {
        assert!(damping >= 0.0);
        Self { curvature, damping }
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }
}

impl HessianOperator for DampedNewtonOperator<'_> {
    fn dim(&self) -> usize {
        self.curvature.dim()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        self.curvature.apply(v, out);
        linalg::axpy(self.damping, v, out);
    }

    fn diagonal(&self) -> Vec<f64> {
        self.curvature
            .diagonal()
            .into_iter()
            .map(|d| d + self.damping)
            .collect()
    }

    fn norm_bound(&self) -> f64 {
        self.curvature.norm_bound() + self.damping
    }

    fn curvature_floor(&self) -> f64 {
        self.curvature.curvature_floor() + self.damping
    }

    fn coordinate_cache(&self) -> Box<dyn CoordinateCache + '_> {
        Box::new(DampedCache {
            inner: self.curvature.coordinate_cache(),
            p: vec![0.0; self.dim()],
            damping: self.damping,
        })
    }

    fn column(&self, j: usize, out: &mut [f64]) {
        self.curvature.column(j, out);
        out[j] += self.damping;
    }
}

struct DampedCache<'a> {
    inner: Box<dyn CoordinateCache + 'a>,
    p: Vec<f64>,
    damping: f64,
}

impl CoordinateCache for DampedCache<'_> {
    fn hp(&self, j: usize) -> f64 {
        self.inner.hp(j) + self.damping * self.p[j]
    }

    fn update(&mut self, j: usize, delta: f64) {
        self.inner.update(j, delta);
        self.p[j] += delta;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{LogisticLoss, QuadraticQuartic, SparseDesignMatrix};
    use crate::regularizer::L1Regularizer;

    #[test]
    fn damping_vanishes_at_solution() {
        let f = QuadraticQuartic::separable(&[1.0, 1.0], &[2.5, 0.3]).unwrap();
        let prob = CompositeProblem::new(f, L1Regularizer::new(1.0).unwrap());
        let x = [2.0, 0.0];
        let mut g = [0.0; 2];
        prob.smooth.gradient(&x, &mut g);
        let h = DampedNewtonOperator::new(&prob, &x, &g, DEFAULT_C, DEFAULT_RHO);
        assert_eq!(h.damping(), 0.0);
        let x = [3.0, 1.0];
        prob.smooth.gradient(&x, &mut g);
        let h = DampedNewtonOperator::new(&prob, &x, &g, DEFAULT_C, DEFAULT_RHO);
        assert!(h.damping() > 0.0);
    }

    #[test]
    fn diagonal_at_origin_for_logistic() {
        let a = SparseDesignMatrix::from_dense(3, 2, &[1.0, 2.0, 0.0, -1.0, 3.0, 0.5]).unwrap();
        let prob = CompositeProblem::new(
            LogisticLoss::new(a, vec![1.0, -1.0, 1.0]).unwrap(),
            L1Regularizer::new(1.0).unwrap(),
        );
        let x = [0.0, 0.0];
        let mut g = [0.0; 2];
        prob.smooth.gradient(&x, &mut g);
        let h = DampedNewtonOperator::new(&prob, &x, &g, DEFAULT_C, DEFAULT_RHO);
        let mu = h.damping();
        let d = h.diagonal();
        assert!((d[0] - (0.25 * 10.0 + mu)).abs() < 1e-15);
        assert!((d[1] - (0.25 * 5.25 + mu)).abs() < 1e-15);
    }
}
