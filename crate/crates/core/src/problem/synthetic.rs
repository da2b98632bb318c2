use super::SmoothFunction;
use crate::error::{check_dim, Error, Result};
use crate::hessian_ops::{DenseOperator, HessianOperator};

/// `f(x) = 1/2 (x-a)^T P (x-a) + sum_i w_i (x_i - a_i)^4 + <b, x>`
///
/// `P` is symmetric positive semidefinite and every `w_i >= 0`, so `f` is
/// convex. The quartic terms have no global Lipschitz gradient; the reported
/// `L_hat` is valid on the box `|x_i - a_i| <= radius`.
#[derive(Debug, Clone)]
pub struct QuadraticQuartic {
    dim: usize,
    p: Vec<f64>,
    center: Vec<f64>,
    linear: Vec<f64>,
    quartic: Vec<f64>,
    radius: f64,
    p_bounds: (f64, f64),
}

impl QuadraticQuartic {
    /// `p` is row-major `d x d`.
    pub fn new(p: Vec<f64>, center: Vec<f64>, linear: Vec<f64>, quartic: Vec<f64>) -> Result<Self> {
        let dim = center.len();
        check_dim(dim * dim, p.len())?;
        check_dim(dim, linear.len())?;
        check_dim(dim, quartic.len())?;
        for i in 0..dim {
            for j in 0..i {
                if (p[i * dim + j] - p[j * dim + i]).abs() > 1e-12 * (1.0 + p[i * dim + j].abs()) {
                    return Err(Error::InvalidArgument("P is not symmetric".into()));
                }
            }
        }
        if quartic.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidArgument("quartic weights must be nonnegative".into()));
        }
        let p_bounds = DenseOperator::new(dim, p.clone())?.spectrum();
        if p_bounds.0 < -1e-10 * p_bounds.1.abs().max(1.0) {
            return Err(Error::InvalidArgument("P is not positive semidefinite".into()));
        }
        Ok(Self {
            dim,
            p,
            center,
            linear,
            quartic,
            radius: 2.0,
            p_bounds: (p_bounds.0.max(0.0), p_bounds.1),
        })
    }

    /// Separable `sum_i c_i (x_i - a_i)^2`, i.e. `P = diag(2c)`.
    pub fn separable(c: &[f64], a: &[f64]) -> Result<Self> {
        let d = c.len();
        check_dim(d, a.len())?;
        let mut p = vec![0.0; d * d];
        for i in 0..d {
            p[i * d + i] = 2.0 * c[i];
        }
        Self::new(p, a.to_vec(), vec![0.0; d], vec![0.0; d])
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// Extreme eigenvalues of `P`.
    pub fn p_spectrum(&self) -> (f64, f64) {
        self.p_bounds
    }

    fn shifted(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.center).map(|(a, b)| a - b).collect()
    }

    fn p_times(&self, v: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.p[i * d..(i + 1) * d].iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }
}

impl SmoothFunction for QuadraticQuartic {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        let r = self.shifted(x);
        let mut pr = vec![0.0; self.dim];
        self.p_times(&r, &mut pr);
        let quad: f64 = 0.5 * r.iter().zip(&pr).map(|(a, b)| a * b).sum::<f64>();
        let quart: f64 = r.iter().zip(&self.quartic).map(|(ri, w)| w * ri.powi(4)).sum();
        let lin: f64 = x.iter().zip(&self.linear).map(|(a, b)| a * b).sum();
        quad + quart + lin
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let r = self.shifted(x);
        self.p_times(&r, out);
        for i in 0..self.dim {
            out[i] += 4.0 * self.quartic[i] * r[i].powi(3) + self.linear[i];
        }
    }

    fn hessian_at<'a>(&'a self, x: &[f64]) -> Box<dyn HessianOperator + 'a> {
        let d = self.dim;
        let mut h = self.p.clone();
        if self.quartic.iter().any(|&w| w > 0.0) {
            for i in 0..d {
                let r = x[i] - self.center[i];
                h[i * d + i] += 12.0 * self.quartic[i] * r * r;
            }
            Box::new(DenseOperator::new(d, h).expect("square by construction"))
        } else {
            Box::new(
                DenseOperator::new(d, h)
                    .expect("square by construction")
                    .with_spectrum(self.p_bounds),
            )
        }
    }

    fn lipschitz_upper(&self) -> Result<f64> {
        let wmax = self.quartic.iter().fold(0.0_f64, |m, &w| m.max(w));
        let l = self.p_bounds.1 * (1.0 + 1e-12) + 12.0 * wmax * self.radius * self.radius;
        if l > 0.0 {
            Ok(l)
        } else {
            Err(Error::Degenerate("zero curvature: no Lipschitz bound".into()))
        }
    }

    fn curvature_floor(&self) -> f64 {
        self.p_bounds.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_example_values() {
        let f = QuadraticQuartic::separable(&[1.0, 1.0], &[2.5, 0.3]).unwrap();
        assert!((f.value(&[2.0, 0.0]) - (0.25 + 0.09)).abs() < 1e-15);
        let mut g = [0.0; 2];
        f.gradient(&[2.0, 0.0], &mut g);
        assert!((g[0] + 1.0).abs() < 1e-15 && (g[1] + 0.6).abs() < 1e-15);
        assert_eq!(f.lipschitz_upper().unwrap(), 2.0 * (1.0 + 1e-12));
    }

    #[test]
    fn quartic_gradient_and_hessian() {
        let f = QuadraticQuartic::new(vec![0.0], vec![1.0], vec![-0.5], vec![2.0]).unwrap();
        let x = [1.5];
        let mut g = [0.0];
        f.gradient(&x, &mut g);
        assert!((g[0] - (8.0 * 0.125 - 0.5)).abs() < 1e-15);
        let mut hv = [0.0];
        f.hess_vec(&x, &[1.0], &mut hv);
        assert!((hv[0] - 24.0 * 0.25).abs() < 1e-14);
    }

    #[test]
    fn rejects_indefinite_or_asymmetric() {
        assert!(QuadraticQuartic::new(vec![1.0, 2.0, 2.0, 1.0], vec![0.0; 2], vec![0.0; 2], vec![0.0; 2]).is_err());
        assert!(QuadraticQuartic::new(vec![1.0, 0.5, 0.0, 1.0], vec![0.0; 2], vec![0.0; 2], vec![0.0; 2]).is_err());
    }
}
