use super::{finish, prox_step, should_stop, Diagnostics, ProxMetric, SubsolveResult, SubsolverBudget};
use crate::quadratic_model::QuadraticModel;

/// Proximal gradient with the fixed step `1 / M_hat`.
pub fn solve_pg(model: &QuadraticModel<'_>, budget: &SubsolverBudget) -> SubsolveResult {
    let d = model.dim();
    let tau = model.default_step();
    let mut p = vec![0.0; d];
    let mut hp = vec![0.0; d];
    let mut q = 0.0;
    let mut pre = model.base().to_vec();
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut met = false;

    while iterations < budget.max_iterations {
        let (pre_next, p_next) = prox_step(model, &p, &hp, tau);
        iterations += 1;
        let stalled = p_next == p;
        let hp_next = model.hess_apply(&p_next);
        let q_next = model.q_value_with(&p_next, &hp_next);
        pre = pre_next;
        p = p_next;
        hp = hp_next;
        q = q_next;
        history.push(q);
        let (stop, ok) = should_stop(model, budget, &p, iterations, stalled);
        if stop {
            met = ok;
            break;
        }
    }

    let diagnostics = Diagnostics {
        metric: ProxMetric::Scalar(tau),
        pre_prox: pre,
        q_history: history,
        restarts: 0,
        criterion_met: met,
    };
    finish(model, p, q, iterations, diagnostics)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::{point, q_star, spd_with_spectrum};
    use super::*;
    use crate::hessian_ops::ScaledIdentity;
    use crate::regularizer::L1Regularizer;

    #[test]
    fn isotropic_model_converges_in_one_iteration() {
        let x = [0.5, -1.0, 0.0, 2.0];
        let g = [1.2, -0.3, 0.4, -3.0];
        let h = ScaledIdentity::new(4, 2.0);
        let r = L1Regularizer::new(0.5).unwrap();
        let m = QuadraticModel::new(&x, &g, &h, &r);
        let out = solve_pg(&m, &SubsolverBudget::fixed(1));
        let expected: Vec<f64> = (0..4)
            .map(|i| crate::linalg::soft_threshold(x[i] - g[i] / 2.0, 0.25) - x[i])
            .collect();
        assert_eq!(out.p, expected);
        let again = solve_pg(&m, &SubsolverBudget::fixed(5));
        assert_eq!(again.p, expected);
        assert_eq!(again.iterations, 2);
    }

    #[test]
    fn q_monotone_and_linear_decay() {
        let r = L1Regularizer::new(0.3).unwrap();
        for seed in 0..10 {
            let h = spd_with_spectrum(12, 0.5, 5.0, seed);
            let x = point(12, seed + 100, 4.0);
            let g = point(12, seed + 200, 3.0);
            let m = QuadraticModel::new(&x, &g, &h, &r);
            let qs = q_star(&m);
            let out = solve_pg(&m, &SubsolverBudget::fixed(40));
            let hist = &out.diagnostics.q_history;
            assert!(hist[0] <= 0.0);
            assert!(hist.windows(2).all(|w| w[1] <= w[0] + 1e-14));
            let gaps: Vec<(f64, f64)> = hist
                .iter()
                .enumerate()
                .filter(|(_, q)| **q - qs > 1e-12)
                .map(|(i, q)| (i as f64, (q - qs).ln()))
                .collect();
            if gaps.len() >= 3 {
                let n = gaps.len() as f64;
                let mx = gaps.iter().map(|g| g.0).sum::<f64>() / n;
                let my = gaps.iter().map(|g| g.1).sum::<f64>() / n;
                let sxy: f64 = gaps.iter().map(|g| (g.0 - mx) * (g.1 - my)).sum();
                let sxx: f64 = gaps.iter().map(|g| (g.0 - mx).powi(2)).sum();
                assert!(sxy / sxx < 0.0);
            }
        }
    }
}
