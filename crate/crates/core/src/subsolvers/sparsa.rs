use super::{finish, prox_step, should_stop, Diagnostics, ProxMetric, SubsolveResult, SubsolverBudget};
use crate::linalg::{dot, sub};
use crate::quadratic_model::QuadraticModel;

/// Monotone SpaRSA: Barzilai-Borwein step clamped to
/// `[1 / (10 M_hat), 10 / m_hat]`, halved until `Q` does not increase. The
/// step `1 / M_hat` always succeeds and is used on the first iteration.
pub fn solve_sparsa(model: &QuadraticModel<'_>, budget: &SubsolverBudget) -> SubsolveResult {
    let d = model.dim();
    let safe = model.default_step();
    let lo = 0.1 * safe;
    let hi = if model.curvature_floor() > 0.0 {
        10.0 / model.curvature_floor()
    } else {
        f64::INFINITY
    };

    let mut p = vec![0.0; d];
    let mut hp = vec![0.0; d];
    let mut q = 0.0;
    let mut pre = model.base().to_vec();
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut met = false;
    let mut tau = safe;

    while iterations < budget.max_iterations {
        let (pre_next, p_next, hp_next, q_next) = loop {
            let (pre_t, p_t) = prox_step(model, &p, &hp, tau);
            let hp_t = model.hess_apply(&p_t);
            let q_t = model.q_value_with(&p_t, &hp_t);
            if q_t <= q || tau <= safe {
                break (pre_t, p_t, hp_t, q_t);
            }
            tau = (0.5 * tau).max(safe);
        };
        iterations += 1;
        if q_next > q {
            // rounding at the safe step
            history.push(q);
            met = should_stop(model, budget, &p, iterations, true).1;
            break;
        }
        let stalled = p_next == p;
        let dp = sub(&p_next, &p);
        let dg = sub(&hp_next, &hp);
        let gg = dot(&dg, &dg);
        let step_used = tau;
        tau = if gg > 0.0 {
            (dot(&dp, &dg) / gg).clamp(lo, hi)
        } else {
            safe
        };
        if !(tau.is_finite() && tau > 0.0) {
            tau = safe;
        }
        p = p_next;
        hp = hp_next;
        q = q_next;
        pre = pre_next;
        history.push(q);
        let (stop, ok) = should_stop(model, budget, &p, iterations, stalled);
        if stop {
            met = ok;
            tau = step_used;
            break;
        }
        if iterations == budget.max_iterations {
            tau = step_used;
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
    use super::super::fixtures::{point, spd_with_spectrum};
    use super::*;
    use crate::hessian_ops::ScaledIdentity;
    use crate::quadratic_model::{StopCriterion, StopKind};
    use crate::regularizer::L1Regularizer;

    #[test]
    fn isotropic_model_bb_step() {
        let h = ScaledIdentity::new(4, 3.0);
        let x = [0.2, 0.0, -1.0, 4.0];
        let g = [1.0, -2.0, 0.5, 0.1];
        let r = L1Regularizer::new(1.0).unwrap();
        let m = QuadraticModel::new(&x, &g, &h, &r);
        let out = solve_sparsa(&m, &SubsolverBudget::fixed(2));
        match out.diagnostics.metric {
            ProxMetric::Scalar(t) => assert!((t - 1.0 / 3.0).abs() < 1e-15),
            _ => panic!("scalar metric expected"),
        }
        for i in 0..4 {
            let exact = crate::linalg::soft_threshold(x[i] - g[i] / 3.0, 1.0 / 3.0) - x[i];
            assert!((out.p[i] - exact).abs() < 1e-15);
        }
    }

    #[test]
    fn monotone_and_meets_criterion() {
        let r = L1Regularizer::new(0.5).unwrap();
        let crit = StopCriterion::absolute(StopKind::ProxGradNorm, 1e-6);
        for seed in 0..10 {
            let h = spd_with_spectrum(20, 0.1, 10.0, seed);
            let x = point(20, seed + 30, 3.0);
            let g = point(20, seed + 40, 3.0);
            let m = QuadraticModel::new(&x, &g, &h, &r);
            let out = solve_sparsa(&m, &SubsolverBudget::until(5, 5000, crit));
            assert!(out.diagnostics.criterion_met, "seed {seed}");
            assert!(out.diagnostics.q_history.windows(2).all(|w| w[1] <= w[0]));
            assert!(out.q_value <= 0.0);
        }
    }
}
