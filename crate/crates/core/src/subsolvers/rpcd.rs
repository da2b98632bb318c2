use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{finish, should_stop, Diagnostics, ProxMetric, SubsolveResult, SubsolverBudget};
use crate::linalg::soft_threshold;
use crate::quadratic_model::QuadraticModel;

/// Randomly permuted cyclic coordinate descent. One iteration is one epoch;
/// each coordinate is set to the exact minimizer of `Q` along it.
pub fn solve_rpcd(model: &QuadraticModel<'_>, budget: &SubsolverBudget) -> SubsolveResult {
    solve_rpcd_observed(model, budget, |_, _| {})
}

/// As [`solve_rpcd`], calling `observe(j, p)` after every coordinate update.
pub fn solve_rpcd_observed<O: FnMut(usize, &[f64])>(
    model: &QuadraticModel<'_>,
    budget: &SubsolverBudget,
    mut observe: O,
) -> SubsolveResult {
    let d = model.dim();
    let x = model.base();
    let g = model.grad();
    let lam = model.lambda();
    let diag = model.hess().diagonal();
    let mut cache = model.hess().coordinate_cache();
    let mut rng = ChaCha8Rng::seed_from_u64(budget.rng_seed);
    let mut order: Vec<usize> = (0..d).collect();

    let mut p = vec![0.0; d];
    let mut pre = x.to_vec();
    let mut q = 0.0;
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut met = false;

    while iterations < budget.max_iterations {
        order.shuffle(&mut rng);
        let mut changed = false;
        for &j in &order {
            let hjj = diag[j];
            if !(hjj > 0.0) {
                continue;
            }
            let cur = x[j] + p[j];
            let w = cur - (g[j] + cache.hp(j)) / hjj;
            let next = soft_threshold(w, lam / hjj);
            pre[j] = w;
            let delta = next - cur;
            if delta != 0.0 {
                p[j] += delta;
                cache.update(j, delta);
                changed = true;
            }
            observe(j, &p);
        }
        iterations += 1;
        q = model.q_value(&p);
        history.push(q);
        let (stop, ok) = should_stop(model, budget, &p, iterations, !changed);
        if stop {
            met = ok;
            break;
        }
    }

    let diagnostics = Diagnostics {
        metric: ProxMetric::Diagonal(diag),
        pre_prox: pre,
        q_history: history,
        restarts: 0,
        criterion_met: met,
    };
    finish(model, p, q, iterations, diagnostics)
}
