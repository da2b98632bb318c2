//! Rate analyzers over solver traces.

use serde::{Deserialize, Serialize};

use super::inequalities::oracle_minimizer;
use super::instances::Sharpness;
use super::RateVerdict;
use crate::error::Result;
use crate::linalg;
use crate::outer_loop::{run_observed, OuterConfig, SolveReport, StepKind};
use crate::problem::{CompositeProblem, SmoothFunction};

/// Allowed relative deviation of a fitted sublinear exponent.
pub const SUBLINEAR_SLOPE_TOL: f64 = 0.25;

/// An accepted subproblem step with its achieved inexactness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstStageStep {
    pub iteration: usize,
    pub alpha: f64,
    /// Norm bound of the final `H_t`.
    pub h_norm: f64,
    pub q_hat: f64,
    /// Oracle subproblem optimum.
    pub q_star: f64,
    /// `(Q_hat - Q*) / (-Q*)`
    pub eta: f64,
    pub objective_before: f64,
    pub objective_after: f64,
}

/// Runs the solver and measures the achieved `eta` of every subproblem step
/// against an oracle solve of the same model.
pub fn observe_first_stage<F: SmoothFunction>(
    problem: &CompositeProblem<F>,
    x0: &[f64],
    config: &OuterConfig,
    fstar: Option<f64>,
) -> Result<(SolveReport, Vec<FirstStageStep>)> {
    let mut steps = Vec::new();
    let report = run_observed(problem, x0, config, fstar, &mut |ev| {
        let (_, q_oracle) = oracle_minimizer(ev.model);
        let q_star = q_oracle.min(ev.result.q_value);
        let eta = if q_star < 0.0 {
            ((ev.result.q_value - q_star) / -q_star).clamp(0.0, 1.0)
        } else {
            0.0
        };
        steps.push(FirstStageStep {
            iteration: ev.iteration,
            alpha: ev.alpha,
            h_norm: ev.model.norm_bound(),
            q_hat: ev.result.q_value,
            q_star,
            eta,
            objective_before: ev.objective_before,
            objective_after: ev.objective_after,
        });
    })?;
    Ok((report, steps))
}

/// Contraction factor of the quadratic-growth bound for one step.
pub(crate) fn qlinear_factor(zeta: f64, h_norm: f64, eta: f64, alpha: f64, gamma: f64) -> f64 {
    let z2 = zeta * zeta;
    let branch = if z2 <= h_norm {
        z2 / (2.0 * h_norm)
    } else {
        1.0 - h_norm / (2.0 * z2)
    };
    1.0 - (1.0 - eta) * alpha * gamma * branch
}

/// Per-step linear-rate verdicts on `delta_t = F(x^t) - F*`.
///
/// `theta = 1/2` uses the quadratic-growth bound with the step's own `alpha`,
/// `||H_t||` and `eta`. `theta` in `(1/2, 1]` uses the early linear factor
/// while `delta_t > (zeta^2 / M)^(1 / (2 theta - 1))` and the weak-sharp
/// factor afterwards, with `M` the largest `||H_t||` seen. Steps starting
/// below `delta_floor` are skipped: their ratio is rounding noise.
pub fn audit_linear_rate(
    instance: &str,
    steps: &[FirstStageStep],
    fstar: f64,
    sharpness: &Sharpness,
    gamma: f64,
    delta_floor: f64,
) -> Vec<RateVerdict> {
    let Sharpness { zeta, theta, xi } = *sharpness;
    let big_m = steps.iter().fold(0.0_f64, |m, s| m.max(s.h_norm));
    let noise = 8.0 * f64::EPSILON * fstar.abs().max(1.0);
    let mut past_t0 = false;
    let mut out = Vec::new();
    for s in steps {
        let before = s.objective_before - fstar;
        let after = s.objective_after - fstar;
        if before <= delta_floor {
            continue;
        }
        let (claim, factor) = if theta == 0.5 {
            ("qlinear", qlinear_factor(zeta, s.h_norm, s.eta, s.alpha, gamma))
        } else if theta > 0.5 {
            let threshold = (zeta * zeta / big_m).powf(1.0 / (2.0 * theta - 1.0));
            past_t0 |= before <= threshold;
            if past_t0 {
                ("weaksharp", 1.0 - (1.0 - s.eta) * s.alpha * gamma / 2.0)
            } else {
                let c = zeta * zeta * xi.powf(1.0 - 2.0 * theta) / (2.0 * big_m);
                ("earlylinear", 1.0 - (1.0 - s.eta) * s.alpha * gamma * c)
            }
        } else {
            continue;
        };
        let id = format!("{instance}/t{}", s.iteration);
        out.push(RateVerdict::at_most(claim, &id, after / before, factor).with_slack(2.0 * noise / before));
    }
    out
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Fits `log delta_t` against `log t` over `t` in `[start, objectives.len())`
/// and compares the slope with `-1 / (1 - 2 theta)`; the measured quantity is
/// the relative deviation.
pub fn audit_sublinear(instance: &str, objectives: &[f64], fstar: f64, theta: f64, start: usize) -> RateVerdict {
    let expected = -1.0 / (1.0 - 2.0 * theta);
    let floor = 64.0 * f64::EPSILON * fstar.abs().max(1.0);
    let (xs, ys): (Vec<f64>, Vec<f64>) = objectives
        .iter()
        .enumerate()
        .skip(start.max(1))
        .filter(|(_, f)| **f - fstar > floor)
        .map(|(t, f)| ((t as f64).ln(), (f - fstar).ln()))
        .unzip();
    let slope = if xs.len() >= 2 { fit_slope(&xs, &ys) } else { f64::NAN };
    let dev = ((slope - expected) / expected).abs();
    let mut v = RateVerdict::at_most("sublinear", instance, dev, SUBLINEAR_SLOPE_TOL);
    v.instance = format!("{instance}/slope={slope:.4}/expected={expected:.4}");
    v
}

/// `(||x^t - x*||, ||x^{t+2} - x*||)` for every two consecutive second-stage
/// steps, a safeguard step and a unit manifold step in either order. Damped
/// manifold steps are skipped: they only occur at the rounding level of `F`.
/// Both errors must lie in `(floor, 1)`. Needs a report with recorded iterates.
pub fn superlinear_pairs(report: &SolveReport, solution: &[f64], floor: f64) -> Vec<(f64, f64)> {
    let Some(xs) = report.iterates.as_ref() else {
        return Vec::new();
    };
    let tr = &report.trace;
    let unit_mo = |k: usize| tr[k].step == StepKind::Manifold && tr[k].alpha == 1.0;
    let pg = |k: usize| tr[k].step == StepKind::ProxGradient;
    let mut out = Vec::new();
    for t in 0..tr.len().saturating_sub(2) {
        if (pg(t + 1) && unit_mo(t + 2)) || (unit_mo(t + 1) && pg(t + 2)) {
            let e0 = linalg::dist(&xs[t], solution);
            let e2 = linalg::dist(&xs[t + 2], solution);
            if e0 > floor && e0 < 1.0 && e2 > floor {
                out.push((e0, e2));
            }
        }
    }
    out
}

/// Exponent `k` of `e_{t+2} = e_t^k` fitted through the last `window` pairs:
/// least squares on `log e_{t+2} = k log e_t`. Fewer pairs give `NaN`.
pub fn audit_superlinear(instance: &str, pairs: &[(f64, f64)], window: usize, minimum: f64) -> RateVerdict {
    let tail = &pairs[pairs.len().saturating_sub(window)..];
    let k = if tail.is_empty() || tail.len() < window {
        f64::NAN
    } else {
        let num: f64 = tail.iter().map(|(a, b)| a.ln() * b.ln()).sum();
        let den: f64 = tail.iter().map(|(a, _)| a.ln() * a.ln()).sum();
        num / den
    };
    let mut v = RateVerdict::at_least("two_step_superlinear", instance, k, minimum);
    v.instance = format!("{instance}/pairs={}", tail.len());
    v
}

/// `k_t <= 2t` for the indices `k_t` of non-manifold iterations, no two
/// consecutive manifold attempts, unit first-stage steps, and monotone `F`.
pub fn audit_structural(instance: &str, report: &SolveReport) -> Vec<RateVerdict> {
    let tr = &report.trace;
    let mut worst_kt = f64::NEG_INFINITY;
    let mut non_mo = 0usize;
    let mut consecutive = 0usize;
    let mut short_steps = 0usize;
    let mut increase = 0.0_f64;
    for r in 1..tr.len() {
        let it = r - 1;
        if !tr[r].step.is_manifold() {
            worst_kt = worst_kt.max(it as f64 - 2.0 * non_mo as f64);
            non_mo += 1;
        } else if tr[r - 1].step.is_manifold() {
            consecutive += 1;
        }
        if tr[r].step == StepKind::Subproblem && tr[r].alpha != 1.0 {
            short_steps += 1;
        }
        increase = increase.max(tr[r].objective - tr[r - 1].objective);
    }
    let worst_kt = if worst_kt.is_finite() { worst_kt } else { 0.0 };
    vec![
        RateVerdict::at_most("k_t<=2t", instance, worst_kt, 0.0),
        RateVerdict::at_most("no_consecutive_mo", instance, consecutive as f64, 0.0),
        RateVerdict::at_most("first_stage_unit_step", instance, short_steps as f64, 0.0),
        RateVerdict::at_most("monotone_objective", instance, increase, 0.0),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outer_loop::{Algorithm, HessianKind};
    use crate::quadratic_model::{StopCriterion, StopKind};
    use crate::verify::{example_one, gen_instance, SyntheticKind, SyntheticSpec};

    #[test]
    fn qlinear_branches_meet_at_half() {
        assert!((qlinear_factor(1.0, 1.0, 0.0, 1.0, 1.0) - 0.5).abs() < 1e-15);
        // zeta^2 = 0.5 <= ||H|| = 1: 1 - gamma / 4
        assert!((qlinear_factor(0.5f64.sqrt(), 1.0, 0.0, 1.0, 1e-4) - (1.0 - 0.25e-4)).abs() < 1e-15);
        // zeta^2 = 2 > ||H|| = 1: 1 - gamma (1 - 1/4)
        assert!((qlinear_factor(2f64.sqrt(), 1.0, 0.0, 1.0, 1e-4) - (1.0 - 0.75e-4)).abs() < 1e-15);
    }

    #[test]
    fn slope_of_power_law() {
        let xs: Vec<f64> = (1..50).map(|t| (t as f64).ln()).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 2.0 * x).collect();
        assert!((fit_slope(&xs, &ys) + 2.0).abs() < 1e-12);
        let objs: Vec<f64> = (0..400).map(|t| 1.0 + 5.0 / ((t + 1) as f64).powi(2)).collect();
        assert!(audit_sublinear("p", &objs, 1.0, 0.25, 50).pass);
        let objs: Vec<f64> = (0..400).map(|t| 1.0 + 5.0 / (t + 1) as f64).collect();
        assert!(!audit_sublinear("p", &objs, 1.0, 0.25, 50).pass);
    }

    #[test]
    fn superlinear_fit_recovers_exponent() {
        let mut pairs = Vec::new();
        let mut e: f64 = 0.1;
        for _ in 0..4 {
            let next = e.powf(1.5);
            pairs.push((e, next));
            e = next;
        }
        let v = audit_superlinear("s", &pairs, 3, 1.4);
        assert!(v.pass && (v.measured - 1.5).abs() < 1e-12);
        assert!(!audit_superlinear("s", &[], 3, 1.4).pass);
        assert!(!audit_superlinear("s", &pairs[..2], 3, 1.4).pass);
        // linear contraction fails
        let linear: Vec<(f64, f64)> = (3..7).map(|k| (0.5f64.powi(k) * 1e-3, 0.5f64.powi(k + 2) * 1e-3)).collect();
        assert!(!audit_superlinear("s", &linear, 3, 1.4).pass);
    }

    #[test]
    fn exact_isotropic_steps_meet_qlinear() {
        let inst = example_one();
        let cfg = OuterConfig {
            algorithm: Algorithm::Isqa,
            hessian: HessianKind::Identity,
            inner_criterion: Some(StopCriterion::absolute(StopKind::ProxGradNorm, 1e-14)),
            inner_max_iterations: 1000,
            ..OuterConfig::default()
        };
        let (_, steps) = observe_first_stage(&inst.problem, &[5.0, -3.0], &cfg, Some(inst.fstar)).unwrap();
        assert!(!steps.is_empty());
        assert!(steps.iter().all(|s| s.eta < 1e-12));
        let v = audit_linear_rate("ex1", &steps, inst.fstar, &inst.sharpness, cfg.gamma, 1e-12);
        assert!(v.iter().all(|r| r.pass), "{v:?}");
    }

    #[test]
    fn weak_sharp_instance_uses_weaksharp_factor() {
        // all coordinates shrink to zero: F - F* >= (lambda - 2 c |a|) ||x||_1
        let problem = CompositeProblem::new(
            crate::problem::QuadraticQuartic::separable(&[0.5, 1.0], &[0.4, -0.2]).unwrap(),
            crate::regularizer::L1Regularizer::new(1.0).unwrap(),
        );
        let fstar = problem.objective(&[0.0, 0.0]);
        let cfg = OuterConfig {
            algorithm: Algorithm::Isqa,
            hessian: HessianKind::Lbfgs,
            ..OuterConfig::default()
        };
        let (_, steps) = observe_first_stage(&problem, &[3.0, 2.0], &cfg, Some(fstar)).unwrap();
        let sharp = Sharpness {
            zeta: 0.6,
            theta: 1.0,
            xi: f64::INFINITY,
        };
        let v = audit_linear_rate("ws", &steps, fstar, &sharp, cfg.gamma, 1e-12);
        assert!(!v.is_empty());
        assert!(v.iter().all(|r| r.pass), "{v:?}");
    }

    #[test]
    fn structural_checks_on_plus_runs() {
        let inst = gen_instance(&SyntheticSpec::new(SyntheticKind::RandomStronglyConvexL1, 15, 1.0, 3)).unwrap();
        let cfg = OuterConfig {
            unchanged_threshold: 3,
            ..OuterConfig::default()
        };
        let rep = crate::outer_loop::run(&inst.problem, &inst.x0, &cfg, None).unwrap();
        for v in audit_structural(&inst.id, &rep) {
            assert!(v.pass, "{v:?}");
        }
    }

    #[test]
    fn structural_flags_consecutive_manifold_steps() {
        let inst = example_one();
        let mut rep = crate::outer_loop::run(&inst.problem, &inst.x0, &OuterConfig::default(), None).unwrap();
        let mut fake = rep.trace[1].clone();
        fake.step = StepKind::ManifoldFailed;
        rep.trace.push(fake.clone());
        rep.trace.push(fake);
        let v = audit_structural("fake", &rep);
        assert!(!v[1].pass);
    }
}
