//! Central finite-difference checks of gradients and Hessian-vector products.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::instances::random_spd;
use super::RateVerdict;
use crate::linalg;
use crate::problem::{LogisticLoss, QuadraticQuartic, SmoothFunction, SparseDesignMatrix};

pub const FD_GRAD_TOL: f64 = 1e-5;
pub const FD_HESS_TOL: f64 = 1e-4;

fn rel_err(fd: &[f64], exact: &[f64]) -> f64 {
    linalg::dist(fd, exact) / linalg::norm(exact).max(1e-8)
}

/// Relative error of the gradient against coordinatewise central differences.
pub fn check_gradient(f: &dyn SmoothFunction, x: &[f64], h: f64) -> f64 {
    let d = f.dim();
    let mut g = vec![0.0; d];
    f.gradient(x, &mut g);
    let mut y = x.to_vec();
    let fd: Vec<f64> = (0..d)
        .map(|i| {
            let hi = h * (1.0 + x[i].abs());
            y[i] = x[i] + hi;
            let up = f.value(&y);
            y[i] = x[i] - hi;
            let down = f.value(&y);
            y[i] = x[i];
            (up - down) / (2.0 * hi)
        })
        .collect();
    rel_err(&fd, &g)
}

/// Relative error of `hess_vec` against central differences of the gradient
/// along `v`.
pub fn check_hess_vec(f: &dyn SmoothFunction, x: &[f64], v: &[f64], h: f64) -> f64 {
    let d = f.dim();
    let mut hv = vec![0.0; d];
    f.hess_vec(x, v, &mut hv);
    let step = h * (1.0 + linalg::norm(x)) / linalg::norm(v).max(1e-300);
    let up: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + step * b).collect();
    let down: Vec<f64> = x.iter().zip(v).map(|(a, b)| a - step * b).collect();
    let (mut gu, mut gd) = (vec![0.0; d], vec![0.0; d]);
    f.gradient(&up, &mut gu);
    f.gradient(&down, &mut gd);
    let fd: Vec<f64> = gu.iter().zip(&gd).map(|(a, b)| (a - b) / (2.0 * step)).collect();
    rel_err(&fd, &hv)
}

fn random_logistic(rng: &mut ChaCha8Rng) -> LogisticLoss {
    let n = rng.random_range(5..60);
    let d = rng.random_range(2..25);
    let mut data = vec![0.0; n * d];
    for v in data.iter_mut() {
        if rng.random::<f64>() < 0.4 {
            *v = 2.0 * rng.random::<f64>() - 1.0;
        }
    }
    let labels = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    let m = SparseDesignMatrix::from_dense(n, d, &data).expect("shape");
    LogisticLoss::new(m, labels).expect("labels are +-1")
}

fn random_quartic(rng: &mut ChaCha8Rng) -> QuadraticQuartic {
    let d = rng.random_range(2..15);
    let (p, _) = random_spd(d, 0.1, 5.0, rng);
    let center = (0..d).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
    let linear = (0..d).map(|_| rng.random::<f64>() - 0.5).collect();
    let quartic = (0..d).map(|_| if rng.random::<bool>() { rng.random::<f64>() } else { 0.0 }).collect();
    QuadraticQuartic::new(p.data().to_vec(), center, linear, quartic).expect("valid by construction")
}

/// Gradient and Hessian-vector checks on `count` random instances,
/// alternating logistic and quadratic-quartic losses.
pub fn fd_suite(count: usize, seed: u64) -> Vec<RateVerdict> {
    let seeds: Vec<u64> = (0..count as u64).map(|i| seed.wrapping_mul(7919).wrapping_add(i)).collect();
    crate::parallel::map_collect(&seeds, |&s| {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let (f, id): (Box<dyn SmoothFunction>, String) = if s % 2 == 0 {
            (Box::new(random_logistic(&mut rng)), format!("logistic-s{s}"))
        } else {
            (Box::new(random_quartic(&mut rng)), format!("quartic-s{s}"))
        };
        let d = f.dim();
        let x: Vec<f64> = (0..d).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
        let v: Vec<f64> = (0..d).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
        vec![
            RateVerdict::at_most("fd_gradient", &id, check_gradient(&*f, &x, 1e-6), FD_GRAD_TOL),
            RateVerdict::at_most("fd_hess_vec", &id, check_hess_vec(&*f, &x, &v, 1e-5), FD_HESS_TOL),
        ]
    })
    .into_iter()
    .flatten()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        for v in fd_suite(10, 3) {
            assert!(v.pass, "{v:?}");
        }
    }

    /// A deliberately wrong gradient must be caught.
    struct Broken(QuadraticQuartic);

    impl SmoothFunction for Broken {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn value(&self, x: &[f64]) -> f64 {
            self.0.value(x)
        }
        fn gradient(&self, x: &[f64], out: &mut [f64]) {
            self.0.gradient(x, out);
            out[0] *= 1.001;
        }
        fn hessian_at<'a>(&'a self, x: &[f64]) -> Box<dyn crate::hessian_ops::HessianOperator + 'a> {
            self.0.hessian_at(x)
        }
        fn lipschitz_upper(&self) -> crate::Result<f64> {
            self.0.lipschitz_upper()
        }
    }

    #[test]
    fn detects_a_wrong_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = Broken(random_quartic(&mut rng));
        let x = vec![0.3; f.dim()];
        assert!(check_gradient(&f, &x, 1e-6) > FD_GRAD_TOL);
    }
}
