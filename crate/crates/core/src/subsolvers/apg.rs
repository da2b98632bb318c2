use super::{finish, prox_step, should_stop, Diagnostics, ProxMetric, SubsolveResult, SubsolverBudget};
use crate::quadratic_model::QuadraticModel;

/// Momentum coefficient `1 - 2 / (sqrt(kappa) + 1)`; `None` when `kappa` is
/// unbounded.
pub fn momentum(norm_bound: f64, floor: f64) -> Option<f64> {
    (floor > 0.0).then(|| {
        let kappa = (norm_bound / floor).max(1.0);
        1.0 - 2.0 / (kappa.sqrt() + 1.0)
    })
}

/// Accelerated proximal gradient with step `1 / M_hat`, constant momentum from
/// the bound ratio `M_hat / m_hat` (the FISTA sequence when `m_hat = 0`), and a
/// restart whenever `Q` would increase.
pub fn solve_apg(model: &QuadraticModel<'_>, budget: &SubsolverBudget) -> SubsolveResult {
    let d = model.dim();
    let tau = model.default_step();
    let fixed = momentum(model.norm_bound(), model.curvature_floor());
    let mut t_seq = 1.0f64;

    let mut p = vec![0.0; d];
    let mut hp = vec![0.0; d];
    let mut p_prev = p.clone();
    let mut hp_prev = hp.clone();
    let mut q = 0.0;
    let mut pre = model.base().to_vec();
    let mut history = Vec::new();
    let mut restarts = 0;
    let mut iterations = 0;
    let mut met = false;
    let mut momentum_on = true;

    while iterations < budget.max_iterations {
        let theta = if !momentum_on {
            0.0
        } else if let Some(c) = fixed {
            c
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_seq * t_seq).sqrt());
            let c = (t_seq - 1.0) / t_next;
            t_seq = t_next;
            c
        };
        let y: Vec<f64> = (0..d).map(|i| p[i] + theta * (p[i] - p_prev[i])).collect();
        let hy: Vec<f64> = (0..d).map(|i| hp[i] + theta * (hp[i] - hp_prev[i])).collect();
        let (pre_next, p_next) = prox_step(model, &y, &hy, tau);
        let hp_next = model.hess_apply(&p_next);
        let q_next = model.q_value_with(&p_next, &hp_next);

        if q_next > q && theta != 0.0 {
            restarts += 1;
            momentum_on = false;
            t_seq = 1.0;
            continue;
        }
        momentum_on = true;
        iterations += 1;
        let stalled = p_next == p && y == p;
        if q_next > q {
            // a plain step from p can only increase Q through rounding
            history.push(q);
            let (_, ok) = should_stop(model, budget, &p, iterations, true);
            met = ok;
            break;
        }
        p_prev = std::mem::replace(&mut p, p_next);
        hp_prev = std::mem::replace(&mut hp, hp_next);
        pre = pre_next;
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
        restarts,
        criterion_met: met,
    };
    finish(model, p, q, iterations, diagnostics)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::{point, q_star, spd_with_spectrum};
    use super::super::solve_pg;
    use super::*;
    use crate::hessian_ops::{HessianOperator, ScaledIdentity};
    use crate::quadratic_model::{StopCriterion, StopKind};
    use crate::regularizer::L1Regularizer;

    #[test]
    fn unit_condition_number_is_pg() {
        let x = [0.5, -1.0, 0.0];
        let g = [1.2, -0.3, 0.4];
        let h = ScaledIdentity::new(3, 1.0);
        let r = L1Regularizer::new(0.5).unwrap();
        let m = QuadraticModel::new(&x, &g, &h, &r);
        assert_eq!(momentum(1.0, 1.0), Some(0.0));
        let a = solve_apg(&m, &SubsolverBudget::fixed(3));
        let b = solve_pg(&m, &SubsolverBudget::fixed(3));
        assert_eq!(a.p, b.p);
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn accelerated_rate_bound() {
        let r = L1Regularizer::new(0.4).unwrap();
        for seed in 0..8 {
            let h = spd_with_spectrum(10, 1.0, 50.0, seed);
            let kappa = h.norm_bound() / h.curvature_floor();
            let x = point(10, seed + 11, 4.0);
            let g = point(10, seed + 22, 6.0);
            let m = QuadraticModel::new(&x, &g, &h, &r);
            let qs = q_star(&m);
            let out = solve_apg(&m, &SubsolverBudget::fixed(60));
            let rate = 1.0 - kappa.powf(-0.5);
            for (i, q) in out.diagnostics.q_history.iter().enumerate() {
                let bound = -2.0 * rate.powi(i as i32 + 1) * qs;
                assert!(q - qs <= bound * (1.0 + 1e-9) + 1e-12, "seed {seed} iter {i}");
            }
            assert!(out.diagnostics.q_history.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn iterations_grow_with_condition_number() {
        let r = L1Regularizer::new(0.1).unwrap();
        let crit = StopCriterion::absolute(StopKind::ProxGradNorm, 1e-8);
        let mut counts = Vec::new();
        for kappa in [10.0, 100.0, 1000.0] {
            let h = spd_with_spectrum(20, 1.0, kappa, 3);
            let x = point(20, 5, 2.0);
            let g = point(20, 6, 5.0);
            let m = QuadraticModel::new(&x, &g, &h, &r);
            let out = solve_apg(&m, &SubsolverBudget::until(1, 100_000, crit));
            assert!(out.diagnostics.criterion_met);
            counts.push(out.iterations);
        }
        assert!(counts[0] <= counts[1] && counts[1] <= counts[2], "{counts:?}");
    }
}
