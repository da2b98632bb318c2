//! Outer iterations.
//!
//! `Isqa` solves the subproblem inexactly and backtracks on the step size.
//! `IsqaPlus` instead enlarges `H_t` until the unit step gives sufficient
//! decrease; once the support of `x` has stayed the same for `S` iterations it
//! alternates proximal-gradient steps with Newton steps on the manifold, and
//! falls back to the first stage whenever a Newton step fails or needs a step
//! size below one.

mod config;
mod steps;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::{Algorithm, HessianKind, OuterConfig};
pub use steps::{armijo_search, pg_safeguard_step, ArmijoOutcome, MAX_LINE_SEARCH_TRIALS};

use crate::error::Result;
use crate::hessian_ops::LbfgsOperator;
use crate::linalg;
use crate::problem::{CompositeProblem, SmoothFunction};
use crate::quadratic_model::QuadraticModel;
use crate::regularizer::{Regularizer, SupportPattern};
use crate::subsolvers::SubsolveResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    First,
    Second,
}

/// What produced an iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Initial,
    /// Quadratic subproblem step.
    Subproblem,
    /// Proximal-gradient safeguard step.
    ProxGradient,
    /// Accepted manifold Newton step.
    Manifold,
    /// Failed manifold Newton step; the iterate is unchanged.
    ManifoldFailed,
}

impl StepKind {
    pub fn tag(self) -> &'static str {
        match self {
            StepKind::Initial => "init",
            StepKind::Subproblem => "first",
            StepKind::ProxGradient => "pg",
            StepKind::Manifold => "mo",
            StepKind::ManifoldFailed => "mo_fail",
        }
    }

    /// Whether a manifold step was attempted.
    pub fn is_manifold(self) -> bool {
        matches!(self, StepKind::Manifold | StepKind::ManifoldFailed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterations,
    MaxSeconds,
    /// Backtracking exhausted its trials.
    LineSearchFailed,
    /// Enlargement exceeded its round bound.
    EnlargementAbort,
    /// Predicted decrease is below floating-point resolution of `F`.
    NumericalFloor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveState {
    pub x: Vec<f64>,
    pub f_val: f64,
    pub psi_val: f64,
    pub stage: Stage,
    pub unchanged: usize,
    pub smooth_step: bool,
    pub pattern: SupportPattern,
    pub l_hat: f64,
    pub iteration: usize,
}

impl SolveState {
    pub fn objective(&self) -> f64 {
        self.f_val + self.psi_val
    }
}

/// One row per iterate `x^t`, with the step that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub wall_seconds: f64,
    pub objective: f64,
    pub rel_gap: Option<f64>,
    pub nnz: usize,
    pub step: StepKind,
    pub alpha: f64,
    pub prox_grad_norm: f64,
    pub inner_iters: usize,
    pub enlargements: usize,
    /// Norm bound of the final `H` of a subproblem step, else 0.
    pub h_norm: f64,
    /// Model value of a subproblem step, else 0.
    pub q_hat: f64,
    pub unchanged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub x: Vec<f64>,
    pub objective: f64,
    pub termination: Termination,
    pub iterations: usize,
    pub trace: Vec<TraceRecord>,
    /// Support pattern of every iterate.
    pub patterns: Vec<SupportPattern>,
    pub iterates: Option<Vec<Vec<f64>>>,
    pub state: SolveState,
    pub lbfgs_rejected: usize,
    pub elapsed_seconds: f64,
}

impl SolveReport {
    pub fn final_pattern(&self) -> &SupportPattern {
        &self.state.pattern
    }

    /// First iteration from which the pattern equals `target` through the end.
    pub fn identified_at(&self, target: &SupportPattern) -> Option<usize> {
        let mut first = None;
        for (t, p) in self.patterns.iter().enumerate() {
            if p == target {
                first.get_or_insert(t);
            } else {
                first = None;
            }
        }
        first
    }
}

/// Data passed to an observer after every accepted subproblem step.
pub struct SubproblemEvent<'a> {
    pub iteration: usize,
    pub model: &'a QuadraticModel<'a>,
    pub result: &'a SubsolveResult,
    pub alpha: f64,
    pub objective_before: f64,
    pub objective_after: f64,
    pub enlargements: usize,
}

pub fn run<F: SmoothFunction>(
    problem: &CompositeProblem<F>,
    x0: &[f64],
    config: &OuterConfig,
    fstar: Option<f64>,
) -> Result<SolveReport> {
    run_observed(problem, x0, config, fstar, &mut |_| {})
}

pub fn run_observed<F: SmoothFunction>(
    problem: &CompositeProblem<F>,
    x0: &[f64],
    config: &OuterConfig,
    fstar: Option<f64>,
    observer: &mut dyn FnMut(&SubproblemEvent<'_>),
) -> Result<SolveReport> {
    config.validate()?;
    problem.check_point(x0)?;
    let l_hat = problem.smooth.lipschitz_upper()?;
    let mut solver = steps::Solver::new(problem, x0, config, l_hat, fstar);
    let termination = solver.drive(observer, &mut |_| {});
    Ok(solver.finish(termination))
}

/// Like [`run`], calling `on_record` with every trace record as soon as it is
/// produced, starting with the initial point.
pub fn run_streaming<F: SmoothFunction>(
    problem: &CompositeProblem<F>,
    x0: &[f64],
    config: &OuterConfig,
    fstar: Option<f64>,
    on_record: &mut dyn FnMut(&TraceRecord),
) -> Result<SolveReport> {
    config.validate()?;
    problem.check_point(x0)?;
    let l_hat = problem.smooth.lipschitz_upper()?;
    let mut solver = steps::Solver::new(problem, x0, config, l_hat, fstar);
    let termination = solver.drive(&mut |_| {}, on_record);
    Ok(solver.finish(termination))
}

pub(crate) fn rel_gap(objective: f64, fstar: Option<f64>) -> Option<f64> {
    fstar.map(|fs| {
        if fs != 0.0 {
            (objective - fs) / fs.abs()
        } else {
            objective - fs
        }
    })
}

pub(crate) fn prox_grad_norm<F: SmoothFunction>(problem: &CompositeProblem<F>, x: &[f64], grad: &[f64]) -> f64 {
    linalg::norm(&problem.prox_gradient(x, grad))
}

pub(crate) struct Clock {
    start: Instant,
}

impl Clock {
    fn new() -> Self {
        Self { start: Instant::now() }
    }

    fn seconds(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}

pub(crate) fn new_lbfgs(dim: usize, config: &OuterConfig) -> LbfgsOperator {
    LbfgsOperator::with_params(dim, config.lbfgs_memory, config.lbfgs_safeguard)
}

pub(crate) fn pattern_of<F: SmoothFunction>(problem: &CompositeProblem<F>, x: &[f64]) -> SupportPattern {
    problem.reg.manifold(x)
}
