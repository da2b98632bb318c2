//! Inner solvers for the quadratic subproblem.
//!
//! All four start from `p = 0`, never let `Q` increase, and finish with a
//! proximal step whose metric and pre-prox point are kept in
//! [`Diagnostics`].

mod apg;
mod pg;
mod rpcd;
mod sparsa;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use apg::solve_apg;
pub use pg::solve_pg;
pub use rpcd::solve_rpcd;
pub use sparsa::solve_sparsa;

use crate::error::Error;
use crate::linalg::soft_threshold;
use crate::quadratic_model::{QuadraticModel, StopCriterion};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubsolverKind {
    Pg,
    Apg,
    #[default]
    Rpcd,
    Sparsa,
}

impl SubsolverKind {
    pub const ALL: [SubsolverKind; 4] = [Self::Pg, Self::Apg, Self::Rpcd, Self::Sparsa];

    pub fn name(self) -> &'static str {
        match self {
            Self::Pg => "pg",
            Self::Apg => "apg",
            Self::Rpcd => "rpcd",
            Self::Sparsa => "sparsa",
        }
    }
}

impl fmt::Display for SubsolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SubsolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown subsolver {s:?} (pg, apg, rpcd, sparsa)")))
    }
}

/// Iteration budget. Without a criterion the solver stops after exactly
/// `min_iterations`, which makes the inexactness implicit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsolverBudget {
    pub min_iterations: usize,
    pub max_iterations: usize,
    pub criterion: Option<StopCriterion>,
    pub rng_seed: u64,
}

impl Default for SubsolverBudget {
    fn default() -> Self {
        Self::fixed(5)
    }
}

impl SubsolverBudget {
    pub fn fixed(iterations: usize) -> Self {
        assert!(iterations >= 1);
        Self {
            min_iterations: iterations,
            max_iterations: iterations,
            criterion: None,
            rng_seed: 0,
        }
    }

    /// At least `min` iterations, then until `criterion` holds or `max`.
    pub fn until(min: usize, max: usize, criterion: StopCriterion) -> Self {
        assert!(min >= 1 && min <= max);
        Self {
            min_iterations: min,
            max_iterations: max,
            criterion: Some(criterion),
            rng_seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }
}

/// Metric of the final proximal step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProxMetric {
    /// `prox_{tau Psi}`
    Scalar(f64),
    /// Coordinatewise steps `1 / h_i`.
    Diagonal(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub metric: ProxMetric,
    /// Point fed to the final prox, in `x + p` coordinates.
    pub pre_prox: Vec<f64>,
    /// `Q` after every iteration (epoch for RPCD).
    pub q_history: Vec<f64>,
    pub restarts: usize,
    pub criterion_met: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsolveResult {
    pub p: Vec<f64>,
    pub q_value: f64,
    pub iterations: usize,
    pub diagnostics: Diagnostics,
}

pub fn solve(kind: SubsolverKind, model: &QuadraticModel<'_>, budget: &SubsolverBudget) -> SubsolveResult {
    match kind {
        SubsolverKind::Pg => solve_pg(model, budget),
        SubsolverKind::Apg => solve_apg(model, budget),
        SubsolverKind::Rpcd => solve_rpcd(model, budget),
        SubsolverKind::Sparsa => solve_sparsa(model, budget),
    }
}

/// One scalar-metric prox step from `y` with `hy = H y`: returns the pre-prox
/// point and the new `p`.
pub(crate) fn prox_step(model: &QuadraticModel<'_>, y: &[f64], hy: &[f64], tau: f64) -> (Vec<f64>, Vec<f64>) {
    let x = model.base();
    let g = model.grad();
    let t = tau * model.lambda();
    let pre: Vec<f64> = (0..y.len()).map(|i| x[i] + y[i] - tau * (g[i] + hy[i])).collect();
    let p = pre.iter().zip(x).map(|(v, xi)| soft_threshold(*v, t) - xi).collect();
    (pre, p)
}

/// Shared stop test once `done` iterations have been made.
pub(crate) fn should_stop(
    model: &QuadraticModel<'_>,
    budget: &SubsolverBudget,
    p: &[f64],
    done: usize,
    stalled: bool,
) -> (bool, bool) {
    if done < budget.min_iterations && !stalled {
        return (false, false);
    }
    let met = match &budget.criterion {
        Some(c) => stalled || model.check_stop(p, c, None),
        None => true,
    };
    (met || done >= budget.max_iterations, met)
}

/// Falls back to `p = 0` if rounding left `Q(p) > 0`.
pub(crate) fn finish(
    model: &QuadraticModel<'_>,
    p: Vec<f64>,
    q: f64,
    iterations: usize,
    diagnostics: Diagnostics,
) -> SubsolveResult {
    if q > 0.0 {
        let d = model.dim();
        return SubsolveResult {
            p: vec![0.0; d],
            q_value: 0.0,
            iterations,
            diagnostics,
        };
    }
    SubsolveResult {
        p,
        q_value: q,
        iterations,
        diagnostics,
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::hessian_ops::DenseOperator;

    /// Random SPD matrix with eigenvalues spread over `[lo, hi]`.
    pub fn spd_with_spectrum(d: usize, lo: f64, hi: f64, seed: u64) -> DenseOperator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<f64> = (0..d * d).map(|_| rng.random::<f64>() - 0.5).collect();
        let m = nalgebra::DMatrix::from_row_slice(d, d, &a);
        let q = m.qr().q();
        let eig: Vec<f64> = (0..d)
            .map(|i| if d == 1 { lo } else { lo + (hi - lo) * i as f64 / (d - 1) as f64 })
            .collect();
        let mut data = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                data[i * d + j] = (0..d).map(|k| q[(i, k)] * eig[k] * q[(j, k)]).sum();
            }
        }
        DenseOperator::new(d, data).unwrap().with_spectrum((lo, hi))
    }

    pub fn point(d: usize, seed: u64, scale: f64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..d)
            .map(|_| if rng.random::<f64>() < 0.3 { 0.0 } else { scale * (rng.random::<f64>() - 0.5) })
            .collect()
    }

    /// `Q*` from a long proximal-gradient run.
    pub fn q_star(model: &crate::quadratic_model::QuadraticModel<'_>) -> f64 {
        let budget = super::SubsolverBudget::until(
            1,
            1_000_000,
            crate::quadratic_model::StopCriterion::absolute(
                crate::quadratic_model::StopKind::ProxGradNorm,
                1e-15,
            ),
        );
        super::solve_pg(model, &budget).q_value
    }
}
