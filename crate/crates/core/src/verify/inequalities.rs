//! Subproblem inequalities: the residual and gradient-mapping chain, and the
//! error bound at the prox-gradient point.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{instances::random_spd, RateVerdict};
use crate::hessian_ops::DenseOperator;
use crate::linalg;
use crate::quadratic_model::{error_bound_constant, QuadraticModel};
use crate::regularizer::L1Regularizer;
use crate::subsolvers::{self, SubsolverBudget};

pub const ORACLE_ITERATIONS: usize = 1_000_000;

/// Iterations without a strict decrease of `Q` after which the oracle has
/// reached rounding level.
const ORACLE_PATIENCE: usize = 100;

/// Minimizer of `Q` from up to [`ORACLE_ITERATIONS`] proximal-gradient steps
/// with step `1 / M_hat`. Returns the best iterate seen.
pub fn oracle_minimizer(model: &QuadraticModel<'_>) -> (Vec<f64>, f64) {
    let d = model.dim();
    let tau = model.default_step();
    let mut p = vec![0.0; d];
    let mut hp = vec![0.0; d];
    let (mut best_p, mut best_q) = (p.clone(), 0.0);
    let mut idle = 0;
    for _ in 0..ORACLE_ITERATIONS {
        let next = model.prox_grad_step_with(&p, &hp, tau);
        if next == p {
            break;
        }
        p = next;
        hp = model.hess_apply(&p);
        let q = model.q_value_with(&p, &hp);
        if q < best_q {
            best_q = q;
            best_p.clone_from(&p);
            idle = 0;
        } else {
            idle += 1;
            if idle >= ORACLE_PATIENCE {
                break;
            }
        }
    }
    (best_p, best_q)
}

/// A random subproblem with exact curvature bounds.
#[derive(Debug, Clone)]
pub struct SubproblemInstance {
    pub id: String,
    pub base: Vec<f64>,
    pub grad: Vec<f64>,
    pub hess: DenseOperator,
    pub reg: L1Regularizer,
}

impl SubproblemInstance {
    /// `d` in `[2, max_dim]`, spectrum `[m, M]` with `m` in `[0.05, 1]` and
    /// condition number up to 100.
    pub fn random(seed: u64, max_dim: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.random_range(2..=max_dim.max(2));
        let m = 0.05 + 0.95 * rng.random::<f64>();
        let big_m = m * (1.0 + 99.0 * rng.random::<f64>());
        let (hess, _) = random_spd(d, m, big_m, &mut rng);
        let base = (0..d)
            .map(|_| if rng.random::<f64>() < 0.3 { 0.0 } else { 4.0 * rng.random::<f64>() - 2.0 })
            .collect();
        let grad = (0..d).map(|_| 4.0 * rng.random::<f64>() - 2.0).collect();
        let reg = L1Regularizer::new(0.1 + 1.9 * rng.random::<f64>()).expect("positive");
        Self {
            id: format!("subproblem-s{seed}-d{d}"),
            base,
            grad,
            hess,
            reg,
        }
    }

    pub fn model(&self) -> QuadraticModel<'_> {
        QuadraticModel::new(&self.base, &self.grad, &self.hess, &self.reg)
    }
}

/// Sample points: the origin, the oracle minimizer and perturbations of it,
/// early proximal-gradient iterates, and random points.
pub fn sample_points(model: &QuadraticModel<'_>, p_star: &[f64], seed: u64) -> Vec<Vec<f64>> {
    let d = model.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![vec![0.0; d], p_star.to_vec()];
    for scale in [1e-6, 1e-3, 1e-1] {
        out.push(p_star.iter().map(|v| v + scale * (2.0 * rng.random::<f64>() - 1.0)).collect());
    }
    for k in [1, 2, 5, 20] {
        out.push(subsolvers::solve_pg(model, &SubsolverBudget::fixed(k)).p);
    }
    for _ in 0..4 {
        out.push((0..d).map(|_| 6.0 * rng.random::<f64>() - 3.0).collect());
    }
    out
}

/// Rounding level of a computed `Q(p) - Q*`.
fn gap_noise(model: &QuadraticModel<'_>, p: &[f64], q_p: f64, q_star: f64) -> f64 {
    let hp = model.hess_apply(p);
    let x_p = linalg::add(model.base(), p);
    let l1 = |v: &[f64]| v.iter().map(|a| a.abs()).sum::<f64>();
    let mag = 1.0
        + q_p.abs()
        + q_star.abs()
        + linalg::norm(model.grad()) * linalg::norm(p)
        + linalg::norm(&hp) * linalg::norm(p)
        + model.lambda() * (l1(&x_p) + l1(model.base()));
    64.0 * f64::EPSILON * mag
}

/// Checks at every sample `p` and step `tau` in `{1, 1/2, 1/10} / M`:
///
/// * `residual_gap_bound`: `2 m (Q(p) - Q*) <= ||r||^2`
/// * `gradient_map_gap_bound`: `m M G_tau(p)^2 <= 2 m (Q(p) - Q*)`
/// * `error_bound`: `tau / K (Q(p_bar_tau) - Q*) <= G_tau(p)^2`
pub fn audit_inequalities(
    instance: &str,
    model: &QuadraticModel<'_>,
    samples: &[Vec<f64>],
    q_star: f64,
) -> Vec<RateVerdict> {
    let m = model.curvature_floor();
    let big_m = model.norm_bound();
    let mut out = Vec::new();
    for (k, p) in samples.iter().enumerate() {
        let q_p = model.q_value(p);
        let gap = q_p - q_star;
        let noise = gap_noise(model, p, q_p, q_star);
        let r = model.residual_min_norm(p);
        let id = format!("{instance}/p{k}");
        out.push(RateVerdict::at_most("residual_gap_bound", &id, 2.0 * m * gap, r * r).with_slack(2.0 * m * noise));
        for frac in [1.0, 0.5, 0.1] {
            let tau = frac / big_m;
            let g = model.prox_grad_norm(p, tau);
            out.push(
                RateVerdict::at_most("gradient_map_gap_bound", &id, m * big_m * g * g, 2.0 * m * gap)
                    .with_slack(2.0 * m * noise),
            );
            let bar = model.prox_grad_step(p, tau);
            let q_bar = model.q_value(&bar);
            let kc = error_bound_constant(m, big_m, tau);
            out.push(
                RateVerdict::at_most("error_bound", &id, tau / kc * (q_bar - q_star), g * g)
                    .with_slack(tau / kc * gap_noise(model, &bar, q_bar, q_star)),
            );
        }
    }
    out
}

/// Audits `count` random subproblems of dimension at most `max_dim`.
pub fn inequality_suite(count: usize, max_dim: usize, seed: u64) -> Vec<RateVerdict> {
    let seeds: Vec<u64> = (0..count as u64).map(|i| seed.wrapping_mul(1_000_003).wrapping_add(i)).collect();
    crate::parallel::map_collect(&seeds, |&s| {
        let inst = SubproblemInstance::random(s, max_dim);
        let model = inst.model();
        let (p_star, q_star) = oracle_minimizer(&model);
        let samples = sample_points(&model, &p_star, s ^ 0x5eed);
        audit_inequalities(&inst.id, &model, &samples, q_star)
    })
    .into_iter()
    .flatten()
    .collect()
}
