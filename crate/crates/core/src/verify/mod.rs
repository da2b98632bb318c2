//! Executable checks of the convergence theory: instances with known
//! solutions, inequality audits, identification audits and rate analyzers.
//!
//! Every audit returns [`RateVerdict`]s. A verdict compares a measured
//! quantity with a bound; `slack` absorbs the rounding level of the measured
//! quantity where it is computed as a difference of nearly equal numbers.

mod datasets;
mod fdcheck;
mod identification;
mod inequalities;
mod instances;
mod rates;
mod reference;
mod suites;

use serde::{Deserialize, Serialize};

pub use datasets::{a9a_like, a9a_subset, load_head, A9A_FEATURES, A9A_PATH_ENV};
pub use fdcheck::{check_gradient, check_hess_vec, fd_suite, FD_GRAD_TOL, FD_HESS_TOL};
pub use identification::{
    audit_identification, counterexample_trace, identification_suite, IdentificationVerdict,
};
pub use inequalities::{
    audit_inequalities, inequality_suite, oracle_minimizer, sample_points, SubproblemInstance,
    ORACLE_ITERATIONS,
};
pub use instances::{
    example_one, gen_instance, random_spd, Instance, Sharpness, SyntheticKind, SyntheticSpec,
    CERTIFY_TOL,
};
pub use rates::{
    audit_linear_rate, audit_structural, audit_sublinear, audit_superlinear, fit_slope,
    observe_first_stage, superlinear_pairs, FirstStageStep, SUBLINEAR_SLOPE_TOL,
};
pub use reference::{reference_solve, Reference, REFERENCE_TOL};
pub use suites::{run_suite, Suite, SuiteOptions, EXACT_INNER, SUBLINEAR_ITERATIONS};

/// Relative tolerance of every verdict.
pub const VERDICT_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `measured <= bound`
    AtMost,
    /// `measured >= bound`
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateVerdict {
    pub claim: String,
    pub instance: String,
    pub measured: f64,
    pub bound: f64,
    pub comparison: Comparison,
    pub slack: f64,
    pub pass: bool,
    /// Distance to the bound in the passing direction; negative on failure.
    pub margin: f64,
}

impl RateVerdict {
    pub fn at_most(claim: &str, instance: &str, measured: f64, bound: f64) -> Self {
        Self::build(claim, instance, measured, bound, Comparison::AtMost, 0.0)
    }

    pub fn at_least(claim: &str, instance: &str, measured: f64, bound: f64) -> Self {
        Self::build(claim, instance, measured, bound, Comparison::AtLeast, 0.0)
    }

    pub fn with_slack(self, slack: f64) -> Self {
        Self::build(&self.claim, &self.instance, self.measured, self.bound, self.comparison, slack.abs())
    }

    fn build(claim: &str, instance: &str, measured: f64, bound: f64, comparison: Comparison, slack: f64) -> Self {
        let tol = VERDICT_RTOL * bound.abs() + slack;
        let margin = match comparison {
            Comparison::AtMost => bound - measured,
            Comparison::AtLeast => measured - bound,
        };
        Self {
            claim: claim.to_string(),
            instance: instance.to_string(),
            measured,
            bound,
            comparison,
            slack,
            pass: margin + tol >= 0.0,
            margin,
        }
    }
}

/// Verdict counts per claim, in first-seen order.
pub fn summarize(verdicts: &[RateVerdict]) -> Vec<(String, usize, usize)> {
    let mut out: Vec<(String, usize, usize)> = Vec::new();
    for v in verdicts {
        let slot = match out.iter().position(|(c, _, _)| *c == v.claim) {
            Some(i) => i,
            None => {
                out.push((v.claim.clone(), 0, 0));
                out.len() - 1
            }
        };
        out[slot].1 += 1;
        if v.pass {
            out[slot].2 += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_tolerance() {
        assert!(RateVerdict::at_most("c", "i", 1.0 + 5e-10, 1.0).pass);
        assert!(!RateVerdict::at_most("c", "i", 1.0 + 2e-9, 1.0).pass);
        assert!(RateVerdict::at_least("c", "i", 1.5, 1.4).pass);
        assert!(!RateVerdict::at_least("c", "i", 1.3, 1.4).pass);
        assert!(RateVerdict::at_most("c", "i", 1e-17, 0.0).with_slack(1e-16).pass);
        assert!(!RateVerdict::at_most("c", "i", 1e-17, 0.0).pass);
    }

    #[test]
    fn summary_counts() {
        let v = vec![
            RateVerdict::at_most("a", "1", 0.0, 1.0),
            RateVerdict::at_most("b", "1", 2.0, 1.0),
            RateVerdict::at_most("a", "2", 3.0, 1.0),
        ];
        assert_eq!(summarize(&v), vec![("a".into(), 2, 1), ("b".into(), 1, 0)]);
    }
}
