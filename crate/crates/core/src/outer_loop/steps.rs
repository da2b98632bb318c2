use crate::error::{Error, Result};
use crate::hessian_ops::{
    DampedNewtonOperator, Enlargement, HessianOperator, LbfgsOperator, ScaledIdentity,
};
use crate::linalg::{self, soft_threshold};
use crate::manifold_newton::{tssn_step, Chart};
use crate::problem::{CompositeProblem, SmoothFunction};
use crate::quadratic_model::QuadraticModel;
use crate::regularizer::Regularizer;
use crate::subsolvers::{self, SubsolverBudget};

use super::{
    new_lbfgs, pattern_of, prox_grad_norm, rel_gap, Algorithm, Clock, HessianKind, OuterConfig,
    SolveReport, SolveState, Stage, StepKind, SubproblemEvent, Termination, TraceRecord,
};

pub const MAX_LINE_SEARCH_TRIALS: usize = 50;

/// Relative size below which a predicted decrease of `F` is rounding noise.
const NOISE: f64 = 8.0 * f64::EPSILON;

#[derive(Debug, Clone, PartialEq)]
pub struct ArmijoOutcome {
    pub alpha: f64,
    pub trials: usize,
    pub x: Vec<f64>,
    pub objective: f64,
}

/// Largest `alpha` in `{1, beta, beta^2, ...}` with
/// `F(x + alpha p) <= F(x) + gamma alpha q_hat`. `Ok(None)` after
/// [`MAX_LINE_SEARCH_TRIALS`] failures.
pub fn armijo_search(
    objective: impl Fn(&[f64]) -> f64,
    x: &[f64],
    fx: f64,
    p: &[f64],
    q_hat: f64,
    gamma: f64,
    beta: f64,
) -> Result<Option<ArmijoOutcome>> {
    if !(q_hat < 0.0) {
        return Err(Error::Contract(format!("line search needs Q(p) < 0, got {q_hat}")));
    }
    let mut alpha = 1.0;
    for trials in 1..=MAX_LINE_SEARCH_TRIALS {
        let cand: Vec<f64> = x.iter().zip(p).map(|(a, b)| a + alpha * b).collect();
        let fc = objective(&cand);
        if fc <= fx + gamma * alpha * q_hat {
            return Ok(Some(ArmijoOutcome {
                alpha,
                trials,
                x: cand,
                objective: fc,
            }));
        }
        alpha *= beta;
    }
    Ok(None)
}

/// `prox_{Psi / L}(x - grad / L)`.
pub fn pg_safeguard_step<F: SmoothFunction>(
    problem: &CompositeProblem<F>,
    x: &[f64],
    grad: &[f64],
    l_hat: f64,
) -> Vec<f64> {
    let t = problem.reg.lambda() / l_hat;
    x.iter()
        .zip(grad)
        .map(|(xi, gi)| soft_threshold(xi - gi / l_hat, t))
        .collect()
}

fn mix_seed(seed: u64, t: usize, round: usize) -> u64 {
    let mut z = seed ^ ((t as u64) << 20) ^ (round as u64);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

struct StepInfo {
    kind: StepKind,
    alpha: f64,
    inner_iters: usize,
    enlargements: usize,
    h_norm: f64,
    q_hat: f64,
}

enum Outcome {
    Moved {
        x: Vec<f64>,
        info: StepInfo,
    },
    Stayed(StepInfo),
    Stop(Termination),
}

pub(crate) struct Solver<'p, F: SmoothFunction> {
    problem: &'p CompositeProblem<F>,
    config: OuterConfig,
    fstar: Option<f64>,
    state: SolveState,
    grad: Vec<f64>,
    g_norm: f64,
    lbfgs: LbfgsOperator,
    pcg_budget: usize,
    last_pattern: Option<crate::regularizer::SupportPattern>,
    trace: Vec<TraceRecord>,
    patterns: Vec<crate::regularizer::SupportPattern>,
    iterates: Option<Vec<Vec<f64>>>,
    clock: Clock,
}

impl<'p, F: SmoothFunction> Solver<'p, F> {
    pub(crate) fn new(
        problem: &'p CompositeProblem<F>,
        x0: &[f64],
        config: &OuterConfig,
        l_hat: f64,
        fstar: Option<f64>,
    ) -> Self {
        let clock = Clock::new();
        let d = problem.dim();
        let mut grad = vec![0.0; d];
        let f_val = problem.smooth.value_gradient(x0, &mut grad);
        let state = SolveState {
            x: x0.to_vec(),
            f_val,
            psi_val: problem.reg.value(x0),
            stage: Stage::First,
            unchanged: 0,
            smooth_step: false,
            pattern: pattern_of(problem, x0),
            l_hat,
            iteration: 0,
        };
        let g_norm = prox_grad_norm(problem, x0, &grad);
        let mut s = Self {
            problem,
            config: *config,
            fstar,
            state,
            grad,
            g_norm,
            lbfgs: new_lbfgs(d, config),
            pcg_budget: config.tssn.pcg_initial_budget,
            last_pattern: None,
            trace: Vec::new(),
            patterns: Vec::new(),
            iterates: config.record_iterates.then(Vec::new),
            clock,
        };
        s.record(StepInfo {
            kind: StepKind::Initial,
            alpha: 0.0,
            inner_iters: 0,
            enlargements: 0,
            h_norm: 0.0,
            q_hat: 0.0,
        });
        s
    }

    fn record(&mut self, info: StepInfo) {
        let objective = self.state.objective();
        self.trace.push(TraceRecord {
            iteration: self.state.iteration,
            wall_seconds: self.clock.seconds(),
            objective,
            rel_gap: rel_gap(objective, self.fstar),
            nnz: self.state.pattern.nnz(),
            step: info.kind,
            alpha: info.alpha,
            prox_grad_norm: self.g_norm,
            inner_iters: info.inner_iters,
            enlargements: info.enlargements,
            h_norm: info.h_norm,
            q_hat: info.q_hat,
            unchanged: self.state.unchanged,
        });
        self.patterns.push(self.state.pattern.clone());
        if let Some(it) = self.iterates.as_mut() {
            it.push(self.state.x.clone());
        }
    }

    pub(crate) fn drive(
        &mut self,
        observer: &mut dyn FnMut(&SubproblemEvent<'_>),
        on_record: &mut dyn FnMut(&TraceRecord),
    ) -> Termination {
        for r in &self.trace {
            on_record(r);
        }
        loop {
            if self.g_norm <= self.config.tol {
                return Termination::Converged;
            }
            if self.state.iteration >= self.config.max_outer {
                return Termination::MaxIterations;
            }
            if self.clock.seconds() >= self.config.max_seconds {
                return Termination::MaxSeconds;
            }
            let outcome = match self.config.algorithm {
                Algorithm::Isqa => self.isqa_step(observer),
                Algorithm::IsqaPlus => self.isqa_plus_step(observer),
            };
            match outcome {
                Outcome::Stop(t) => return t,
                Outcome::Moved { x, info } => {
                    self.accept(x);
                    self.record(info);
                }
                Outcome::Stayed(info) => {
                    self.state.iteration += 1;
                    self.record(info);
                }
            }
            if let Some(r) = self.trace.last() {
                on_record(r);
            }
        }
    }

    fn accept(&mut self, x: Vec<f64>) {
        let d = self.problem.dim();
        let mut grad = vec![0.0; d];
        let f_val = self.problem.smooth.value_gradient(&x, &mut grad);
        let s = linalg::sub(&x, &self.state.x);
        let y = linalg::sub(&grad, &self.grad);
        if self.config.hessian == HessianKind::Lbfgs {
            self.lbfgs.update(&s, &y);
        }
        self.state.psi_val = self.problem.reg.value(&x);
        self.state.f_val = f_val;
        self.state.pattern = pattern_of(self.problem, &x);
        self.g_norm = prox_grad_norm(self.problem, &x, &grad);
        self.state.x = x;
        self.grad = grad;
        self.state.iteration += 1;
    }

    fn base_hessian(&self) -> Box<dyn HessianOperator + '_> {
        match self.config.hessian {
            HessianKind::Lbfgs => Box::new(&self.lbfgs),
            HessianKind::Newton => Box::new(DampedNewtonOperator::new(
                self.problem,
                &self.state.x,
                &self.grad,
                self.config.newton_c,
                self.config.newton_rho,
            )),
            HessianKind::Identity => Box::new(ScaledIdentity::new(self.problem.dim(), self.state.l_hat)),
        }
    }

    fn budget(&self, round: usize) -> SubsolverBudget {
        let c = &self.config;
        SubsolverBudget {
            min_iterations: c.inner_iterations,
            max_iterations: if c.inner_criterion.is_some() {
                c.inner_max_iterations
            } else {
                c.inner_iterations
            },
            criterion: c.inner_criterion,
            rng_seed: mix_seed(c.seed, self.state.iteration, round),
        }
    }

    fn is_noise(&self, q_hat: f64) -> bool {
        -q_hat <= NOISE * self.state.objective().abs().max(1.0)
    }

    fn isqa_step(&mut self, observer: &mut dyn FnMut(&SubproblemEvent<'_>)) -> Outcome {
        self.count_unchanged();
        let fx = self.state.objective();
        let h = self.base_hessian();
        let model = QuadraticModel::new(&self.state.x, &self.grad, &*h, &self.problem.reg);
        let res = subsolvers::solve(self.config.subsolver, &model, &self.budget(0));
        if !(res.q_value < 0.0) {
            return Outcome::Stop(Termination::NumericalFloor);
        }
        let search = armijo_search(
            |z| self.problem.objective(z),
            &self.state.x,
            fx,
            &res.p,
            res.q_value,
            self.config.gamma,
            self.config.beta,
        )
        .expect("Q(p) < 0 checked above");
        let Some(out) = search else {
            return Outcome::Stop(if self.is_noise(res.q_value) {
                Termination::NumericalFloor
            } else {
                Termination::LineSearchFailed
            });
        };
        observer(&SubproblemEvent {
            iteration: self.state.iteration,
            model: &model,
            result: &res,
            alpha: out.alpha,
            objective_before: fx,
            objective_after: out.objective,
            enlargements: 0,
        });
        let info = StepInfo {
            kind: StepKind::Subproblem,
            alpha: out.alpha,
            inner_iters: res.iterations,
            enlargements: 0,
            h_norm: h.norm_bound(),
            q_hat: res.q_value,
        };
        Outcome::Moved { x: out.x, info }
    }

    /// Compares the manifold of `x^t` with that of `x^{t-1}`.
    fn count_unchanged(&mut self) {
        let current = self.state.pattern.clone();
        if self.last_pattern.as_ref() == Some(&current) {
            self.state.unchanged += 1;
        } else if self.last_pattern.is_some() {
            self.state.unchanged = 0;
        }
        self.last_pattern = Some(current);
    }

    fn isqa_plus_step(&mut self, observer: &mut dyn FnMut(&SubproblemEvent<'_>)) -> Outcome {
        self.count_unchanged();

        if self.state.unchanged < self.config.unchanged_threshold {
            self.state.stage = Stage::First;
            self.state.smooth_step = false;
            return self.first_stage_step(observer);
        }
        self.state.stage = Stage::Second;
        if self.state.smooth_step {
            self.state.smooth_step = false;
            let x = pg_safeguard_step(self.problem, &self.state.x, &self.grad, self.state.l_hat);
            let info = StepInfo {
                kind: StepKind::ProxGradient,
                alpha: 1.0,
                inner_iters: 0,
                enlargements: 0,
                h_norm: self.state.l_hat,
                q_hat: 0.0,
            };
            if self.problem.objective(&x) > self.state.objective() {
                // only reachable through rounding when L_hat >= L
                return Outcome::Stayed(info);
            }
            return Outcome::Moved { x, info };
        }

        let fx = self.state.objective();
        match tssn_step(self.problem, &self.state.x, fx, &self.config.tssn, self.pcg_budget) {
            Ok(step) => {
                let dim = Chart::at(&self.state.x).dim();
                self.pcg_budget = self.config.tssn.next_budget(self.pcg_budget, step.alpha, dim);
                if step.alpha == 1.0 {
                    self.state.smooth_step = true;
                } else {
                    self.state.unchanged = 0;
                }
                let info = StepInfo {
                    kind: StepKind::Manifold,
                    alpha: step.alpha,
                    inner_iters: step.pcg_iterations,
                    enlargements: 0,
                    h_norm: 0.0,
                    q_hat: 0.0,
                };
                Outcome::Moved { x: step.x, info }
            }
            Err(_) => {
                self.pcg_budget = self.config.tssn.pcg_initial_budget;
                self.state.unchanged = 0;
                Outcome::Stayed(StepInfo {
                    kind: StepKind::ManifoldFailed,
                    alpha: 0.0,
                    inner_iters: 0,
                    enlargements: 0,
                    h_norm: 0.0,
                    q_hat: 0.0,
                })
            }
        }
    }

    fn first_stage_step(&mut self, observer: &mut dyn FnMut(&SubproblemEvent<'_>)) -> Outcome {
        let fx = self.state.objective();
        let h0 = self.base_hessian();
        let mut enlarge = Enlargement::new(self.config.enlargement, self.config.beta);
        let limit = enlarge
            .round_bound(self.state.l_hat, h0.curvature_floor())
            .map(|b| b + 10)
            .unwrap_or(100);
        loop {
            let h = enlarge.wrap(&*h0);
            let model = QuadraticModel::new(&self.state.x, &self.grad, &h, &self.problem.reg);
            let res = subsolvers::solve(self.config.subsolver, &model, &self.budget(enlarge.rounds()));
            if !(res.q_value < 0.0) {
                return Outcome::Stop(Termination::NumericalFloor);
            }
            let x = linalg::add(&self.state.x, &res.p);
            let fnew = self.problem.objective(&x);
            if fnew <= fx + self.config.gamma * res.q_value {
                observer(&SubproblemEvent {
                    iteration: self.state.iteration,
                    model: &model,
                    result: &res,
                    alpha: 1.0,
                    objective_before: fx,
                    objective_after: fnew,
                    enlargements: enlarge.rounds(),
                });
                let info = StepInfo {
                    kind: StepKind::Subproblem,
                    alpha: 1.0,
                    inner_iters: res.iterations,
                    enlargements: enlarge.rounds(),
                    h_norm: h.norm_bound(),
                    q_hat: res.q_value,
                };
                return Outcome::Moved { x, info };
            }
            if self.is_noise(res.q_value) {
                return Outcome::Stop(Termination::NumericalFloor);
            }
            if enlarge.rounds() >= limit {
                return Outcome::Stop(Termination::EnlargementAbort);
            }
            enlarge.advance();
        }
    }

    pub(crate) fn finish(self, termination: Termination) -> SolveReport {
        SolveReport {
            x: self.state.x.clone(),
            objective: self.state.objective(),
            termination,
            iterations: self.state.iteration,
            trace: self.trace,
            patterns: self.patterns,
            iterates: self.iterates,
            lbfgs_rejected: self.lbfgs.rejected(),
            elapsed_seconds: self.clock.seconds(),
            state: self.state,
        }
    }
}
