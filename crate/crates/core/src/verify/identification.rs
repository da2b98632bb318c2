use serde::{Deserialize, Serialize};

use super::instances::{gen_instance, SyntheticKind, SyntheticSpec};
use crate::error::{Error, Result};
use crate::outer_loop::{run, OuterConfig};
use crate::regularizer::SupportPattern;
use crate::subsolvers::SubsolverKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationVerdict {
    pub instance: String,
    /// First iteration from which every later pattern equals the target.
    pub identified_at: Option<usize>,
    /// First iteration whose pattern equals the target at all.
    pub first_hit: Option<usize>,
    pub final_matches: bool,
    pub iterations: usize,
}

impl IdentificationVerdict {
    pub fn persistent(&self) -> bool {
        self.identified_at.is_some()
    }
}

pub fn audit_identification(instance: &str, patterns: &[SupportPattern], target: &SupportPattern) -> IdentificationVerdict {
    let first_hit = patterns.iter().position(|p| p == target);
    let mut identified_at = None;
    for (t, p) in patterns.iter().enumerate() {
        if p == target {
            identified_at.get_or_insert(t);
        } else {
            identified_at = None;
        }
    }
    IdentificationVerdict {
        instance: instance.to_string(),
        identified_at,
        first_hit,
        final_matches: patterns.last() == Some(target),
        iterations: patterns.len().saturating_sub(1),
    }
}

/// `x^t = (2 + 2^-t, 2^-t)`: converges to the solution `(2, 0)` of the
/// two-dimensional example while never leaving the full-support manifold.
pub fn counterexample_trace(len: usize) -> Result<Vec<Vec<f64>>> {
    // 2^-t stays a positive normal number up to t = 1022
    if len > 1000 {
        return Err(Error::InvalidArgument("scripted trace is limited to 1000 points".into()));
    }
    Ok((0..len)
        .map(|t| {
            let f = 0.5_f64.powi(t as i32);
            vec![2.0 + f, f]
        })
        .collect())
}

/// Runs each subsolver with fixed `inner` iterations on `count` strongly
/// convex instances and compares the final support with the certified one.
pub fn identification_suite(
    count: usize,
    dim: usize,
    inner: usize,
    seed: u64,
) -> Result<Vec<(SubsolverKind, IdentificationVerdict)>> {
    let jobs: Vec<(SubsolverKind, u64)> = SubsolverKind::ALL
        .iter()
        .flat_map(|&k| (0..count as u64).map(move |i| (k, seed + i)))
        .collect();
    crate::parallel::map_collect(&jobs, |&(kind, s)| {
        let inst = gen_instance(&SyntheticSpec::new(SyntheticKind::RandomStronglyConvexL1, dim, 1.0, s))?;
        let cfg = OuterConfig {
            subsolver: kind,
            inner_iterations: inner,
            inner_max_iterations: inner,
            tol: 1e-10,
            max_outer: 2000,
            seed: s,
            ..OuterConfig::default()
        };
        let rep = run(&inst.problem, &inst.x0, &cfg, Some(inst.fstar))?;
        let id = format!("{}/{}", inst.id, kind);
        Ok((kind, audit_identification(&id, &rep.patterns, &inst.support())))
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::example_one;

    #[test]
    fn counterexample_never_identifies() {
        let target = example_one().support();
        let trace = counterexample_trace(1000).unwrap();
        let patterns: Vec<_> = trace.iter().map(|x| SupportPattern::of(x)).collect();
        let v = audit_identification("counterexample", &patterns, &target);
        assert_eq!(v.identified_at, None);
        assert_eq!(v.first_hit, None);
        // yet the iterates converge
        assert!(crate::linalg::dist(trace.last().unwrap(), &[2.0, 0.0]) < 1e-290);
        assert!(counterexample_trace(1001).is_err());
    }

    #[test]
    fn start_at_solution_is_identified_immediately() {
        let inst = example_one();
        let rep = run(&inst.problem, &inst.solution, &OuterConfig::default(), None).unwrap();
        let v = audit_identification("start", &rep.patterns, &inst.support());
        assert_eq!(v.identified_at, Some(0));
        assert!(v.final_matches);
    }

    #[test]
    fn transient_hits_are_not_persistent() {
        let a = SupportPattern::of(&[1.0, 0.0]);
        let b = SupportPattern::of(&[1.0, 1.0]);
        let v = audit_identification("x", &[b.clone(), a.clone(), b.clone(), a.clone(), a.clone()], &a);
        assert_eq!((v.first_hit, v.identified_at, v.final_matches), (Some(1), Some(3), true));
        let v = audit_identification("x", &[a.clone(), b], &a);
        assert_eq!((v.identified_at, v.final_matches), (None, false));
    }

    #[test]
    fn small_suite_identifies() {
        for (kind, v) in identification_suite(3, 12, 5, 1).unwrap() {
            assert!(v.final_matches, "{kind}: {v:?}");
        }
    }
}
