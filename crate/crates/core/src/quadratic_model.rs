//! The subproblem
//!
//! `Q(p) = <grad f(x), p> + 1/2 <p, H p> + Psi(x + p) - Psi(x)`
//!
//! together with the prox-gradient map, the minimum-norm subgradient residual
//! and the inner stopping tests.

use serde::{Deserialize, Serialize};

use crate::hessian_ops::HessianOperator;
use crate::linalg::{self, dot};
use crate::regularizer::{L1Regularizer, Regularizer};

/// Quadratic model of `F` around `base`. Immutable once built.
pub struct QuadraticModel<'a> {
    base: &'a [f64],
    grad: &'a [f64],
    hess: &'a dyn HessianOperator,
    reg: &'a L1Regularizer,
    psi_base: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopKind {
    /// `Q(p) - Q* <= eps`, certified from computable quantities.
    ObjectiveGap,
    /// `||r|| <= eps` with `r` the minimum-norm subgradient.
    ResidualNorm,
    /// `||p - p_bar|| <= eps` with the step `1 / M_hat`.
    ProxGradNorm,
}

/// Inner termination rule. With `eta` set, the objective-gap tolerance is the
/// multiplicative `eta * (-Q*)`, bounded below by `eta * (-Q(p))`; `eta` is
/// ignored by the other kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopCriterion {
    pub kind: StopKind,
    pub epsilon: f64,
    pub eta: Option<f64>,
}

impl StopCriterion {
    pub fn absolute(kind: StopKind, epsilon: f64) -> Self {
        assert!(epsilon >= 0.0);
        Self { kind, epsilon, eta: None }
    }

    pub fn multiplicative(eta: f64) -> Self {
        assert!((0.0..1.0).contains(&eta));
        Self {
            kind: StopKind::ObjectiveGap,
            epsilon: 0.0,
            eta: Some(eta),
        }
    }
}

/// Constant `K` of the error bound `Q(p_bar) - Q* <= K G_tau^2 / tau`,
/// `K = (2/m + tau)(1 + M tau)/tau - 1/2`.
pub fn error_bound_constant(m: f64, big_m: f64, tau: f64) -> f64 {
    if m <= 0.0 {
        return f64::INFINITY;
    }
    (2.0 / m + tau) * (1.0 + big_m * tau) / tau - 0.5
}

impl<'a> QuadraticModel<'a> {
    pub fn new(
        base: &'a [f64],
        grad: &'a [f64],
        hess: &'a dyn HessianOperator,
        reg: &'a L1Regularizer,
    ) -> Self {
        assert_eq!(base.len(), grad.len());
        assert_eq!(base.len(), hess.dim());
        Self {
            base,
            grad,
            hess,
            reg,
            psi_base: reg.value(base),
        }
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    pub fn base(&self) -> &[f64] {
        self.base
    }

    pub fn grad(&self) -> &[f64] {
        self.grad
    }

    pub fn hess(&self) -> &dyn HessianOperator {
        self.hess
    }

    pub fn reg(&self) -> &L1Regularizer {
        self.reg
    }

    pub fn lambda(&self) -> f64 {
        self.reg.lambda()
    }

    /// `M_hat`
    pub fn norm_bound(&self) -> f64 {
        self.hess.norm_bound()
    }

    /// `m_hat`
    pub fn curvature_floor(&self) -> f64 {
        self.hess.curvature_floor()
    }

    pub fn hess_apply(&self, p: &[f64]) -> Vec<f64> {
        let mut hp = vec![0.0; self.dim()];
        self.hess.apply(p, &mut hp);
        hp
    }

    /// `Psi(x + p) - Psi(x)`
    pub fn psi_change(&self, p: &[f64]) -> f64 {
        let lam = self.reg.lambda();
        lam * self
            .base
            .iter()
            .zip(p)
            .map(|(x, pi)| (x + pi).abs())
            .sum::<f64>()
            - self.psi_base
    }

    pub fn q_value(&self, p: &[f64]) -> f64 {
        let hp = self.hess_apply(p);
        self.q_value_with(p, &hp)
    }

    /// `Q(p)` given `hp = H p`.
    pub fn q_value_with(&self, p: &[f64], hp: &[f64]) -> f64 {
        dot(self.grad, p) + 0.5 * dot(p, hp) + self.psi_change(p)
    }

    /// Smooth-part gradient `grad f(x) + H p`.
    pub fn smooth_gradient_with(&self, hp: &[f64]) -> Vec<f64> {
        linalg::add(self.grad, hp)
    }

    /// `p_bar = prox_{tau Psi}(x + p - tau (grad f(x) + H p)) - x`
    pub fn prox_grad_step(&self, p: &[f64], tau: f64) -> Vec<f64> {
        let hp = self.hess_apply(p);
        self.prox_grad_step_with(p, &hp, tau)
    }

    pub fn prox_grad_step_with(&self, p: &[f64], hp: &[f64], tau: f64) -> Vec<f64> {
        assert!(tau > 0.0, "prox step must be positive");
        let t = tau * self.reg.lambda();
        (0..self.dim())
            .map(|i| {
                let v = self.base[i] + p[i] - tau * (self.grad[i] + hp[i]);
                linalg::soft_threshold(v, t) - self.base[i]
            })
            .collect()
    }

    /// Default prox step `1 / M_hat`.
    pub fn default_step(&self) -> f64 {
        1.0 / self.norm_bound()
    }

    /// `G_tau(p) = ||p - p_bar_tau||`
    pub fn prox_grad_norm(&self, p: &[f64], tau: f64) -> f64 {
        linalg::dist(p, &self.prox_grad_step(p, tau))
    }

    /// Minimum-norm element of `dQ(p)`; for l1 a coordinatewise clamp.
    pub fn residual_min_norm(&self, p: &[f64]) -> f64 {
        let hp = self.hess_apply(p);
        let g = self.smooth_gradient_with(&hp);
        let x: Vec<f64> = linalg::add(self.base, p);
        self.reg.stationarity_residual(&x, &g)
    }

    /// Certified upper bound on `Q(p) - Q*`: the smaller of
    /// `||r||^2 / (2 m)` and `Q(p) - Q(p_bar) + K G^2 / tau`.
    pub fn certified_gap(&self, p: &[f64]) -> f64 {
        let m = self.curvature_floor();
        let big_m = self.norm_bound();
        let tau = 1.0 / big_m;
        let hp = self.hess_apply(p);
        let q = self.q_value_with(p, &hp);
        let p_bar = self.prox_grad_step_with(p, &hp, tau);
        let q_bar = self.q_value(&p_bar);
        let g = linalg::dist(p, &p_bar);
        let via_prox = (q - q_bar).max(0.0) + error_bound_constant(m, big_m, tau) * g * g / tau;
        let via_residual = if m > 0.0 {
            let r = self.residual_min_norm(p);
            r * r / (2.0 * m)
        } else {
            f64::INFINITY
        };
        via_prox.min(via_residual)
    }

    /// `q_star_bound`, when known, is a lower bound on `Q*` and replaces the
    /// certified gap estimate.
    pub fn check_stop(&self, p: &[f64], criterion: &StopCriterion, q_star_bound: Option<f64>) -> bool {
        match criterion.kind {
            StopKind::ObjectiveGap => {
                let q = self.q_value(p);
                let eps = match criterion.eta {
                    Some(eta) => eta * (-q),
                    None => criterion.epsilon,
                };
                let gap = match q_star_bound {
                    Some(lb) => q - lb,
                    None => self.certified_gap(p),
                };
                gap <= eps && eps >= 0.0
            }
            StopKind::ResidualNorm => self.residual_min_norm(p) <= criterion.epsilon,
            StopKind::ProxGradNorm => self.prox_grad_norm(p, self.default_step()) <= criterion.epsilon,
        }
    }
}
