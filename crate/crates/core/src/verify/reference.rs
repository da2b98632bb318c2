//! High-accuracy reference objective values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::outer_loop::{run, HessianKind, OuterConfig, Termination};
use crate::problem::{CompositeProblem, SmoothFunction};

pub const REFERENCE_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub value: f64,
    /// Identity-metric prox-gradient norm at the returned point.
    pub residual: f64,
    pub iterations: usize,
    pub termination: Termination,
}

/// ISQA+ with the damped Newton model at tolerance [`REFERENCE_TOL`]. The run
/// usually ends on the floating-point floor before that tolerance.
pub fn reference_solve<F: SmoothFunction>(problem: &CompositeProblem<F>, x0: &[f64], max_outer: usize) -> Result<Reference> {
    if problem.dim() == 0 {
        return Err(Error::Degenerate("empty problem".into()));
    }
    let cfg = OuterConfig {
        hessian: HessianKind::Newton,
        tol: REFERENCE_TOL,
        max_outer,
        ..OuterConfig::default()
    };
    let rep = run(problem, x0, &cfg, None)?;
    let residual = rep.trace.last().map_or(f64::NAN, |r| r.prox_grad_norm);
    Ok(Reference {
        value: rep.objective,
        residual,
        iterations: rep.iterations,
        termination: rep.termination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::{example_one, gen_instance, SyntheticKind, SyntheticSpec};

    #[test]
    fn example_one_reference() {
        let inst = example_one();
        let r = reference_solve(&inst.problem, &inst.x0, 1000).unwrap();
        assert!((r.value - inst.fstar).abs() <= 1e-13);
    }

    #[test]
    fn reference_is_below_shorter_runs() {
        let inst = gen_instance(&SyntheticSpec::new(SyntheticKind::RandomStronglyConvexL1, 20, 0.5, 9)).unwrap();
        let r = reference_solve(&inst.problem, &inst.x0, 10_000).unwrap();
        assert!((r.value - inst.fstar).abs() <= 1e-12 * inst.fstar.abs().max(1.0));
        for budget in [1, 3, 10] {
            let cfg = OuterConfig {
                max_outer: budget,
                ..OuterConfig::default()
            };
            let short = run(&inst.problem, &inst.x0, &cfg, None).unwrap();
            assert!(r.value <= short.objective);
        }
    }
}
