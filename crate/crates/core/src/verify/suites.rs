//! Named audit suites, shared by the command line and the acceptance tests.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::fdcheck::fd_suite;
use super::identification::{audit_identification, counterexample_trace, identification_suite};
use super::inequalities::inequality_suite;
use super::instances::{example_one, gen_instance, Instance, SyntheticKind, SyntheticSpec};
use super::rates::{
    audit_linear_rate, audit_structural, audit_sublinear, audit_superlinear, observe_first_stage,
    superlinear_pairs,
};
use super::RateVerdict;
use crate::error::{Error, Result};
use crate::outer_loop::{run, Algorithm, HessianKind, OuterConfig};
use crate::quadratic_model::{StopCriterion, StopKind};
use crate::regularizer::SupportPattern;
use crate::subsolvers::SubsolverKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Inequalities,
    Identification,
    Qlinear,
    Sublinear,
    Superlinear,
    Structural,
    Gradients,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Inequalities,
        Suite::Identification,
        Suite::Qlinear,
        Suite::Sublinear,
        Suite::Superlinear,
        Suite::Structural,
        Suite::Gradients,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Inequalities => "inequalities",
            Suite::Identification => "identification",
            Suite::Qlinear => "qlinear",
            Suite::Sublinear => "sublinear",
            Suite::Superlinear => "superlinear",
            Suite::Structural => "structural",
            Suite::Gradients => "gradients",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Instance count override; each suite has its own default.
    pub instances: Option<usize>,
    /// Restrict instance-based suites to the two-dimensional example.
    pub example_one: bool,
}


pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Result<Vec<RateVerdict>> {
    match suite {
        Suite::Inequalities => Ok(inequality_suite(opts.instances.unwrap_or(200), 20, opts.seed)),
        Suite::Identification => identification(opts),
        Suite::Qlinear => qlinear(opts),
        Suite::Sublinear => sublinear(opts),
        Suite::Superlinear => superlinear(opts),
        Suite::Structural => structural(opts),
        Suite::Gradients => Ok(fd_suite(opts.instances.unwrap_or(50), opts.seed)),
    }
}

fn counterexample_verdict() -> Result<RateVerdict> {
    let target = example_one().support();
    let patterns: Vec<SupportPattern> = counterexample_trace(200)?.iter().map(|x| SupportPattern::of(x)).collect();
    let v = audit_identification("example1-scripted", &patterns, &target);
    Ok(RateVerdict::at_most(
        "counterexample_never_identifies",
        "example1-scripted",
        v.first_hit.is_some() as u8 as f64,
        0.0,
    ))
}

fn identification(opts: &SuiteOptions) -> Result<Vec<RateVerdict>> {
    let mut out = vec![counterexample_verdict()?];
    if opts.example_one {
        let inst = example_one();
        for hessian in [HessianKind::Lbfgs, HessianKind::Newton] {
            for kind in SubsolverKind::ALL {
                let cfg = OuterConfig {
                    hessian,
                    subsolver: kind,
                    tol: 1e-12,
                    max_outer: 25,
                    seed: opts.seed,
                    ..OuterConfig::default()
                };
                let rep = run(&inst.problem, &inst.x0, &cfg, Some(inst.fstar))?;
                let id = format!("example1/{hessian}/{kind}");
                let v = audit_identification(&id, &rep.patterns, &inst.support());
                let at = v.identified_at.map_or(f64::INFINITY, |t| t as f64);
                out.push(RateVerdict::at_most("identified_by_iteration_3", &id, at, 3.0));
            }
        }
        return Ok(out);
    }
    for (_, v) in identification_suite(opts.instances.unwrap_or(20), 30, 5, opts.seed)? {
        out.push(RateVerdict::at_most(
            "final_support_matches",
            &v.instance,
            (!v.final_matches) as u8 as f64,
            0.0,
        ));
    }
    Ok(out)
}

/// Inner solves run to this prox-gradient norm when a suite asks for exact
/// subproblem solutions.
pub const EXACT_INNER: f64 = 1e-13;

fn exact(mut cfg: OuterConfig) -> OuterConfig {
    cfg.inner_criterion = Some(StopCriterion::absolute(StopKind::ProxGradNorm, EXACT_INNER));
    cfg.inner_max_iterations = 100_000;
    cfg
}

fn mu_one_instances(opts: &SuiteOptions) -> Result<Vec<Instance>> {
    if opts.example_one {
        return Ok(vec![example_one()]);
    }
    let n = opts.instances.unwrap_or(4) as u64;
    let mut out = Vec::new();
    for i in 0..n {
        let s = opts.seed + i;
        out.push(gen_instance(&SyntheticSpec::new(SyntheticKind::SeparableQuadraticL1, 10, 1.0, s))?);
        out.push(gen_instance(&SyntheticSpec::new(SyntheticKind::RandomStronglyConvexL1, 15, 1.0, s))?);
    }
    Ok(out)
}

fn qlinear(opts: &SuiteOptions) -> Result<Vec<RateVerdict>> {
    let mut jobs = Vec::new();
    for inst in mu_one_instances(opts)? {
        for algorithm in [Algorithm::Isqa, Algorithm::IsqaPlus] {
            for hessian in [HessianKind::Identity, HessianKind::Lbfgs, HessianKind::Newton] {
                jobs.push((inst.clone(), algorithm, hessian));
            }
        }
    }
    let seed = opts.seed;
    let parts: Vec<Result<Vec<RateVerdict>>> = crate::parallel::map_collect(&jobs, |(inst, algorithm, hessian)| {
        let cfg = exact(OuterConfig {
            algorithm: *algorithm,
            hessian: *hessian,
            subsolver: SubsolverKind::Apg,
            tol: 1e-9,
            max_outer: 500,
            seed,
            ..OuterConfig::default()
        });
        let (_, steps) = observe_first_stage(&inst.problem, &inst.x0, &cfg, Some(inst.fstar))?;
        let id = format!("{}/{algorithm}/{hessian}", inst.id);
        let floor = 1e-12 * inst.fstar.abs().max(1.0);
        Ok(audit_linear_rate(&id, &steps, inst.fstar, &inst.sharpness, cfg.gamma, floor))
    });
    collect(parts)
}

fn collect(parts: Vec<Result<Vec<RateVerdict>>>) -> Result<Vec<RateVerdict>> {
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Iterations of the proximal-gradient run fitted by the sublinear suite.
pub const SUBLINEAR_ITERATIONS: usize = 4000;

fn sublinear(opts: &SuiteOptions) -> Result<Vec<RateVerdict>> {
    let n = opts.instances.unwrap_or(1) as u64;
    let seeds: Vec<u64> = (0..n).map(|i| opts.seed + i).collect();
    let parts = crate::parallel::map_collect(&seeds, |&s| -> Result<Vec<RateVerdict>> {
        let inst = gen_instance(&SyntheticSpec::new(SyntheticKind::DegeneratePsdL1, 9, 0.0, s))?;
        // a fixed H = L_hat I keeps the step length bounded away from zero
        let cfg = OuterConfig {
            algorithm: Algorithm::Isqa,
            hessian: HessianKind::Identity,
            subsolver: SubsolverKind::Pg,
            inner_iterations: 1,
            inner_max_iterations: 1,
            tol: 0.0,
            max_outer: SUBLINEAR_ITERATIONS,
            ..OuterConfig::default()
        };
        let rep = run(&inst.problem, &inst.x0, &cfg, Some(inst.fstar))?;
        let objs: Vec<f64> = rep.trace.iter().map(|r| r.objective).collect();
        let start = objs.len() / 10;
        Ok(vec![audit_sublinear(&inst.id, &objs, inst.fstar, inst.sharpness.theta, start)])
    });
    collect(parts)
}

fn superlinear(opts: &SuiteOptions) -> Result<Vec<RateVerdict>> {
    let n = opts.instances.unwrap_or(3) as u64;
    let mut jobs = Vec::new();
    for i in 0..n {
        for (rho, minimum) in [(0.5, 1.4), (1.0, 1.8)] {
            jobs.push((opts.seed + i, rho, minimum));
        }
    }
    let parts = crate::parallel::map_collect(&jobs, |&(s, rho, minimum)| -> Result<Vec<RateVerdict>> {
        let inst = gen_instance(&SyntheticSpec::new(SyntheticKind::RandomStronglyConvexL1, 30, 1.0, s))?;
        // a cheap first stage and S = 2 start the second stage early enough
        // for several pairs above the rounding floor
        let mut cfg = OuterConfig {
            hessian: HessianKind::Identity,
            unchanged_threshold: 2,
            tol: 1e-13,
            max_outer: 2000,
            record_iterates: true,
            seed: s,
            ..OuterConfig::default()
        };
        cfg.tssn.rho = rho;
        let rep = run(&inst.problem, &inst.x0, &cfg, Some(inst.fstar))?;
        let floor = 1e-11 * (1.0 + crate::linalg::norm(&inst.solution));
        let pairs = superlinear_pairs(&rep, &inst.solution, floor);
        let id = format!("{}/rho={rho}", inst.id);
        Ok(vec![audit_superlinear(&id, &pairs, 3, minimum)])
    });
    collect(parts)
}

fn structural(opts: &SuiteOptions) -> Result<Vec<RateVerdict>> {
    let n = opts.instances.unwrap_or(3) as u64;
    let mut instances = vec![example_one()];
    if !opts.example_one {
        for i in 0..n {
            let s = opts.seed + i;
            for kind in [
                SyntheticKind::SeparableQuadraticL1,
                SyntheticKind::RandomStronglyConvexL1,
                SyntheticKind::DegeneratePsdL1,
            ] {
                instances.push(gen_instance(&SyntheticSpec::new(kind, 20, 1.0, s))?);
            }
        }
    }
    let mut jobs = Vec::new();
    for inst in &instances {
        for hessian in [HessianKind::Lbfgs, HessianKind::Newton] {
            for kind in SubsolverKind::ALL {
                for s_threshold in [2, 10] {
                    jobs.push((inst, hessian, kind, s_threshold));
                }
            }
        }
    }
    let seed = opts.seed;
    let parts = crate::parallel::map_collect(&jobs, |&(inst, hessian, kind, s_threshold)| -> Result<Vec<RateVerdict>> {
        let cfg = OuterConfig {
            hessian,
            subsolver: kind,
            unchanged_threshold: s_threshold,
            tol: 1e-10,
            max_outer: 1000,
            seed,
            ..OuterConfig::default()
        };
        let rep = run(&inst.problem, &inst.x0, &cfg, Some(inst.fstar))?;
        Ok(audit_structural(&format!("{}/{hessian}/{kind}/S={s_threshold}", inst.id), &rep))
    });
    collect(parts)
}
