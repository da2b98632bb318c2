//! Truncated semismooth Newton on the active manifold of the l1 norm.
//!
//! The manifold through `x` is `{y : y_i = 0 for i in the zero set of x}`;
//! its chart is the restriction to the free coordinates. On it
//! `F = f + lambda <sign(y), y>` is smooth, so a damped Newton system solved
//! by preconditioned CG gives the step.

mod pcg;

use serde::{Deserialize, Serialize};

pub use pcg::{pcg, stop_threshold, PcgResult, PcgStatus};

use crate::error::{Error, Result};
use crate::hessian_ops::HessianOperator;
use crate::linalg::{self, dot, norm, sign};
use crate::problem::{CompositeProblem, SmoothFunction};
use crate::regularizer::SupportPattern;

/// Coordinate chart of the manifold through a base point.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    free: Vec<usize>,
    base_signs: Vec<f64>,
    full_dim: usize,
}

impl Chart {
    pub fn at(x: &[f64]) -> Self {
        let free: Vec<usize> = (0..x.len()).filter(|&i| x[i] != 0.0).collect();
        let base_signs = free.iter().map(|&i| sign(x[i])).collect();
        Self {
            free,
            base_signs,
            full_dim: x.len(),
        }
    }

    pub fn pattern(&self) -> SupportPattern {
        let mut zero = Vec::with_capacity(self.full_dim - self.free.len());
        let mut k = 0;
        for i in 0..self.full_dim {
            if k < self.free.len() && self.free[k] == i {
                k += 1;
            } else {
                zero.push(i);
            }
        }
        SupportPattern::from_zero_set(zero, self.full_dim).expect("sorted zero set")
    }

    pub fn free_indices(&self) -> &[usize] {
        &self.free
    }

    pub fn base_signs(&self) -> &[f64] {
        &self.base_signs
    }

    /// Manifold dimension.
    pub fn dim(&self) -> usize {
        self.free.len()
    }

    pub fn full_dim(&self) -> usize {
        self.full_dim
    }

    pub fn embed(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.full_dim];
        for (k, &i) in self.free.iter().enumerate() {
            x[i] = y[k];
        }
        x
    }

    pub fn restrict(&self, x: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| x[i]).collect()
    }
}

/// Gradient of `F` along the chart at `y`, using the signs of `y`.
pub fn chart_gradient<F: SmoothFunction>(problem: &CompositeProblem<F>, chart: &Chart, y: &[f64]) -> Result<Vec<f64>> {
    if let Some(k) = y.iter().position(|&v| v == 0.0) {
        return Err(Error::Degenerate(format!(
            "free coordinate {} is zero on the chart",
            chart.free[k]
        )));
    }
    let x = chart.embed(y);
    let mut full = vec![0.0; chart.full_dim];
    problem.smooth.gradient(&x, &mut full);
    let lam = problem.reg.lambda();
    Ok(chart
        .free
        .iter()
        .zip(y)
        .map(|(&i, &yi)| full[i] + lam * sign(yi))
        .collect())
}

/// `restrict(H embed(v)) + mu v`, where `H` is the generalized Hessian of `f`
/// at a chart point. The l1 term has no curvature on the manifold.
pub struct ReducedOperator<'a> {
    full: Box<dyn HessianOperator + 'a>,
    free: Vec<usize>,
    full_dim: usize,
    mu: f64,
}

impl<'a> ReducedOperator<'a> {
    pub fn new<F: SmoothFunction>(problem: &'a CompositeProblem<F>, chart: &Chart, y: &[f64], mu: f64) -> Self {
        Self {
            full: problem.smooth.hessian_at(&chart.embed(y)),
            free: chart.free.clone(),
            full_dim: chart.full_dim,
            mu,
        }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

impl HessianOperator for ReducedOperator<'_> {
    fn dim(&self) -> usize {
        self.free.len()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let mut e = vec![0.0; self.full_dim];
        for (k, &i) in self.free.iter().enumerate() {
            e[i] = v[k];
        }
        let mut he = vec![0.0; self.full_dim];
        self.full.apply(&e, &mut he);
        for (k, &i) in self.free.iter().enumerate() {
            out[k] = he[i] + self.mu * v[k];
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let d = self.full.diagonal();
        self.free.iter().map(|&i| d[i] + self.mu).collect()
    }

    fn norm_bound(&self) -> f64 {
        self.full.norm_bound() + self.mu
    }

    fn curvature_floor(&self) -> f64 {
        self.full.curvature_floor() + self.mu
    }
}

pub fn reduced_hess_vec<F: SmoothFunction>(
    problem: &CompositeProblem<F>,
    chart: &Chart,
    y: &[f64],
    mu: f64,
    v: &[f64],
) -> Vec<f64> {
    let op = ReducedOperator::new(problem, chart, y, mu);
    let mut out = vec![0.0; chart.dim()];
    op.apply(v, &mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TssnConfig {
    pub c: f64,
    pub rho: f64,
    /// Smallest step `alpha_bar`; reaching it is a failure.
    pub alpha_floor: f64,
    pub beta: f64,
    pub pcg_initial_budget: usize,
}

impl Default for TssnConfig {
    fn default() -> Self {
        Self {
            c: 1e-6,
            rho: 0.5,
            alpha_floor: 0.5f64.powi(20),
            beta: 0.5,
            pcg_initial_budget: 5,
        }
    }
}

impl TssnConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.c > 0.0
            && self.rho > 0.0
            && self.rho <= 1.0
            && self.alpha_floor > 0.0
            && self.alpha_floor < 1.0
            && self.beta > 0.0
            && self.beta < 1.0
            && self.pcg_initial_budget >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid Newton settings {self:?}")))
        }
    }

    /// Next PCG iteration cap: doubled after a unit step (up to the manifold
    /// dimension), reset after a shorter one.
    pub fn next_budget(&self, current: usize, alpha: f64, dim: usize) -> usize {
        if alpha == 1.0 {
            (2 * current).min(dim.max(self.pcg_initial_budget))
        } else {
            self.pcg_initial_budget
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TssnFailure {
    NonDescent,
    TinyStep,
    ChartDegenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TssnStep {
    pub x: Vec<f64>,
    pub objective: f64,
    pub alpha: f64,
    pub g_norm: f64,
    pub mu: f64,
    pub q_norm: f64,
    pub pcg_iterations: usize,
    pub pcg_status: PcgStatus,
    pub pcg_residual: f64,
}

/// One Newton step on the manifold through `x`, where `fx = F(x)`. Accepts
/// any step that does not increase `F`.
pub fn tssn_step<F: SmoothFunction>(
    problem: &CompositeProblem<F>,
    x: &[f64],
    fx: f64,
    config: &TssnConfig,
    pcg_budget: usize,
) -> std::result::Result<TssnStep, TssnFailure> {
    let chart = Chart::at(x);
    let y = chart.restrict(x);
    let g = chart_gradient(problem, &chart, &y).map_err(|_| TssnFailure::ChartDegenerate)?;
    let g_norm = norm(&g);
    let mu = config.c * g_norm.powf(config.rho);
    if g_norm == 0.0 {
        return Ok(TssnStep {
            x: x.to_vec(),
            objective: fx,
            alpha: 1.0,
            g_norm,
            mu,
            q_norm: 0.0,
            pcg_iterations: 0,
            pcg_status: PcgStatus::Converged,
            pcg_residual: 0.0,
        });
    }
    let op = ReducedOperator::new(problem, &chart, &y, mu);
    let sol = pcg(&op, &g, &op.diagonal(), stop_threshold(g_norm, config.rho), pcg_budget);
    if dot(&sol.q, &g) >= 0.0 {
        return Err(TssnFailure::NonDescent);
    }
    let mut alpha = 1.0;
    loop {
        let cand = chart.embed(&linalg::add(&y, &linalg::scale(alpha, &sol.q)));
        let fc = problem.objective(&cand);
        if fc <= fx {
            return Ok(TssnStep {
                x: cand,
                objective: fc,
                alpha,
                g_norm,
                mu,
                q_norm: norm(&sol.q),
                pcg_iterations: sol.iterations,
                pcg_status: sol.status,
                pcg_residual: sol.residual,
            });
        }
        if alpha <= config.alpha_floor {
            return Err(TssnFailure::TinyStep);
        }
        alpha *= config.beta;
        if alpha <= config.alpha_floor {
            return Err(TssnFailure::TinyStep);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hessian_ops::materialize;
    use crate::problem::{LogisticLoss, QuadraticQuartic, SparseDesignMatrix};
    use crate::regularizer::L1Regularizer;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn example_one() -> CompositeProblem<QuadraticQuartic> {
        CompositeProblem::new(
            QuadraticQuartic::separable(&[1.0, 1.0], &[2.5, 0.3]).unwrap(),
            L1Regularizer::new(1.0).unwrap(),
        )
    }

    fn logistic(seed: u64, n: usize, d: usize) -> CompositeProblem<LogisticLoss> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..n * d)
            .map(|_| if rng.random::<f64>() < 0.5 { 0.0 } else { rng.random::<f64>() * 2.0 - 1.0 })
            .collect();
        let labels = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
        let a = SparseDesignMatrix::from_dense(n, d, &data).unwrap();
        CompositeProblem::new(LogisticLoss::new(a, labels).unwrap(), L1Regularizer::new(0.1).unwrap())
    }

    #[test]
    fn chart_round_trip() {
        let x = [0.0, 2.0, -1.0, 0.0];
        let c = Chart::at(&x);
        assert_eq!(c.free_indices(), &[1, 2]);
        assert_eq!(c.base_signs(), &[1.0, -1.0]);
        assert_eq!(c.embed(&c.restrict(&x)), x.to_vec());
        assert_eq!(c.pattern().zero_set(), &[0, 3]);
    }

    #[test]
    fn gradient_vanishes_at_example_solution() {
        let prob = example_one();
        let c = Chart::at(&[2.0, 0.0]);
        assert_eq!(chart_gradient(&prob, &c, &[2.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn regularizer_contributes_signs() {
        let prob = CompositeProblem::new(
            QuadraticQuartic::separable(&[1.0, 1.0], &[3.0, -2.0]).unwrap(),
            L1Regularizer::new(1.0).unwrap(),
        );
        let c = Chart::at(&[3.0, -2.0]);
        assert_eq!(chart_gradient(&prob, &c, &[3.0, -2.0]).unwrap(), vec![1.0, -1.0]);
        assert!(chart_gradient(&prob, &c, &[3.0, 0.0]).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let prob = logistic(1, 30, 6);
        let x = [0.5, 0.0, -0.7, 1.2, 0.0, 0.3];
        let c = Chart::at(&x);
        let y = c.restrict(&x);
        let g = chart_gradient(&prob, &c, &y).unwrap();
        let h = 1e-6;
        for k in 0..c.dim() {
            let mut yp = y.clone();
            let mut ym = y.clone();
            yp[k] += h;
            ym[k] -= h;
            let fd = (prob.objective(&c.embed(&yp)) - prob.objective(&c.embed(&ym))) / (2.0 * h);
            assert!((fd - g[k]).abs() <= 1e-5 * g[k].abs().max(1.0), "{k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn reduced_hessian_properties() {
        let prob = logistic(2, 25, 5);
        let x = [0.5, 0.0, -0.7, 1.2, 0.3];
        let c = Chart::at(&x);
        let y = c.restrict(&x);
        let op = ReducedOperator::new(&prob, &c, &y, 2e-6);
        let m = materialize(&op);
        let k = c.dim();
        for i in 0..k {
            for j in 0..k {
                assert!((m[i * k + j] - m[j * k + i]).abs() < 1e-12);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let v: Vec<f64> = (0..k).map(|_| rng.random::<f64>() - 0.5).collect();
            assert!(dot(&v, &reduced_hess_vec(&prob, &c, &y, 2e-6, &v)) >= 0.0);
        }
        let zero = reduced_hess_vec(&prob, &c, &y, 2e-6, &[1.0, 0.0, 0.0, 0.0]);
        let plain = reduced_hess_vec(&prob, &c, &y, 0.0, &[1.0, 0.0, 0.0, 0.0]);
        assert!((zero[0] - plain[0] - 2e-6).abs() < 1e-15);
        // full support: unrestricted product plus mu
        let full = Chart::at(&[0.1, 0.2, 0.3, 0.4, 0.5]);
        let yf = full.restrict(&[0.1, 0.2, 0.3, 0.4, 0.5]);
        let v = [1.0, -1.0, 0.5, 0.0, 2.0];
        let r = reduced_hess_vec(&prob, &full, &yf, 0.25, &v);
        let mut h = [0.0; 5];
        prob.smooth.hess_vec(&[0.1, 0.2, 0.3, 0.4, 0.5], &v, &mut h);
        for i in 0..5 {
            assert!((r[i] - h[i] - 0.25 * v[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn damping_formula() {
        let cfg = TssnConfig::default();
        assert!((cfg.c * 4f64.powf(cfg.rho) - 2e-6).abs() < 1e-20);
        assert_eq!(cfg.alpha_floor, 0.5f64.powi(20));
        assert_eq!(cfg.next_budget(5, 1.0, 100), 10);
        assert_eq!(cfg.next_budget(80, 1.0, 100), 100);
        assert_eq!(cfg.next_budget(80, 0.5, 100), 5);
    }

    #[test]
    fn stationary_chart_point_is_accepted_unchanged() {
        let prob = example_one();
        let x = [2.0, 0.0];
        let step = tssn_step(&prob, &x, prob.objective(&x), &TssnConfig::default(), 5).unwrap();
        assert_eq!(step.x, x.to_vec());
        assert_eq!(step.alpha, 1.0);
    }

    #[test]
    fn quadratic_chart_converges_in_two_steps() {
        // on the chart x2 = 0 with x1 > 0: F = (x1-2.5)^2 + 0.09 + x1
        let prob = example_one();
        let cfg = TssnConfig::default();
        let mut x = vec![3.0, 0.0];
        for _ in 0..2 {
            let s = tssn_step(&prob, &x, prob.objective(&x), &cfg, 5).unwrap();
            assert_eq!(s.alpha, 1.0);
            x = s.x;
        }
        assert!((x[0] - 2.0).abs() <= 1e-12 && x[1] == 0.0);
    }

    #[test]
    fn wrong_manifold_cannot_beat_restricted_optimum() {
        // true solution (2, 0); chart {x1 = 0} restricted optimum is x2 = 0,
        // F = 6.25 + 0.09. A Newton step on the coordinate x2 alone.
        let prob = example_one();
        let x = [0.0, 1.0];
        let s = tssn_step(&prob, &x, prob.objective(&x), &TssnConfig::default(), 5).unwrap();
        assert_eq!(s.x[0], 0.0);
        assert!(s.objective >= 6.25 + 0.09 - 1e-12);
        // a proximal-gradient step then leaves that manifold
        let mut g = [0.0; 2];
        prob.smooth.gradient(&s.x, &mut g);
        let step = prob.prox_gradient(&s.x, &linalg::scale(0.5, &g));
        assert!(s.x[0] + step[0] != 0.0);
    }

    #[test]
    fn newton_step_on_strongly_convex_quadratic_chart() {
        let p = vec![4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0];
        let f = QuadraticQuartic::new(p, vec![3.0, -2.0, 4.0], vec![0.0; 3], vec![0.0; 3]).unwrap();
        let prob = CompositeProblem::new(f, L1Regularizer::new(0.5).unwrap());
        let cfg = TssnConfig::default();
        let mut x = vec![2.0, -1.0, 3.0];
        let mut errs = Vec::new();
        for _ in 0..3 {
            let s = tssn_step(&prob, &x, prob.objective(&x), &cfg, 3).unwrap();
            assert_eq!(s.alpha, 1.0);
            x = s.x;
            let c = Chart::at(&x);
            errs.push(norm(&chart_gradient(&prob, &c, &c.restrict(&x)).unwrap()));
        }
        // truncation keeps the order at 1 + rho or better
        assert!(errs[2] <= 1e-10, "{errs:?}");
        for w in errs.windows(2) {
            assert!(w[1] <= w[0].powf(1.5), "{errs:?}");
        }
    }
}
