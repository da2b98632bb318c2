use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hessian_ops::{EnlargementVariant, DEFAULT_C, DEFAULT_RHO};
use crate::manifold_newton::TssnConfig;
use crate::quadratic_model::StopCriterion;
use crate::subsolvers::SubsolverKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Line search on every step.
    Isqa,
    /// Unit steps with enlargement, then manifold Newton once the support
    /// settles.
    #[default]
    IsqaPlus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HessianKind {
    #[default]
    Lbfgs,
    Newton,
    /// `L_hat I`, which makes the first stage a proximal-gradient method.
    Identity,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Isqa => "isqa",
            Algorithm::IsqaPlus => "isqa+",
        })
    }
}

impl fmt::Display for HessianKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HessianKind::Lbfgs => "lbfgs",
            HessianKind::Newton => "newton",
            HessianKind::Identity => "identity",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "isqa" => Ok(Algorithm::Isqa),
            "isqa+" | "isqa_plus" | "isqaplus" => Ok(Algorithm::IsqaPlus),
            _ => Err(Error::InvalidArgument(format!("unknown algorithm {s:?}"))),
        }
    }
}

impl FromStr for HessianKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lbfgs" => Ok(HessianKind::Lbfgs),
            "newton" => Ok(HessianKind::Newton),
            "identity" => Ok(HessianKind::Identity),
            _ => Err(Error::InvalidArgument(format!("unknown Hessian model {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuterConfig {
    pub algorithm: Algorithm,
    pub hessian: HessianKind,
    pub subsolver: SubsolverKind,
    pub enlargement: EnlargementVariant,
    /// Sufficient-decrease constant.
    pub gamma: f64,
    /// Backtracking and enlargement factor.
    pub beta: f64,
    /// Minimum inner iterations `T`.
    pub inner_iterations: usize,
    /// Inner cap when `inner_criterion` is set.
    pub inner_max_iterations: usize,
    pub inner_criterion: Option<StopCriterion>,
    /// Iterations with an unchanged support before the second stage (`S`).
    pub unchanged_threshold: usize,
    /// Stop once the identity-metric prox-gradient norm is at most `tol`.
    pub tol: f64,
    pub max_outer: usize,
    /// Wall-clock budget; unbounded by default (`null` when serialized).
    #[serde(with = "unbounded")]
    pub max_seconds: f64,
    pub seed: u64,
    pub lbfgs_memory: usize,
    pub lbfgs_safeguard: f64,
    pub newton_c: f64,
    pub newton_rho: f64,
    pub tssn: TssnConfig,
    /// Keep every iterate in the report.
    pub record_iterates: bool,
}

impl Default for OuterConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::IsqaPlus,
            hessian: HessianKind::Lbfgs,
            subsolver: SubsolverKind::Rpcd,
            enlargement: EnlargementVariant::Doubling,
            gamma: 1e-4,
            beta: 0.5,
            inner_iterations: 5,
            inner_max_iterations: 5,
            inner_criterion: None,
            unchanged_threshold: 10,
            tol: 1e-8,
            max_outer: 10_000,
            max_seconds: f64::INFINITY,
            seed: 0,
            lbfgs_memory: 10,
            lbfgs_safeguard: 1e-10,
            newton_c: DEFAULT_C,
            newton_rho: DEFAULT_RHO,
            tssn: TssnConfig::default(),
            record_iterates: false,
        }
    }
}

impl OuterConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad("beta must lie in (0, 1)");
        }
        if self.inner_iterations == 0 {
            return bad("T must be at least 1");
        }
        if self.inner_criterion.is_some() && self.inner_max_iterations < self.inner_iterations {
            return bad("inner iteration cap is below T");
        }
        if self.unchanged_threshold == 0 {
            return bad("S must be at least 1");
        }
        if !(self.tol >= 0.0) {
            return bad("tolerance must be nonnegative");
        }
        if !(self.max_seconds > 0.0) {
            return bad("time budget must be positive");
        }
        if self.lbfgs_memory == 0 || !(self.lbfgs_safeguard > 0.0) {
            return bad("L-BFGS memory and safeguard must be positive");
        }
        if !(self.newton_c > 0.0 && self.newton_rho > 0.0 && self.newton_rho <= 1.0) {
            return bad("Newton damping needs c > 0 and rho in (0, 1]");
        }
        self.tssn.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = OuterConfig::default();
        c.validate().unwrap();
        assert_eq!((c.gamma, c.beta, c.inner_iterations, c.unchanged_threshold), (1e-4, 0.5, 5, 10));
    }

    #[test]
    fn rejects_bad_constants() {
        let mut c = OuterConfig::default();
        c.gamma = 1.0;
        assert!(c.validate().is_err());
        let mut c = OuterConfig::default();
        c.unchanged_threshold = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn parse_names() {
        assert_eq!("isqa+".parse::<Algorithm>().unwrap(), Algorithm::IsqaPlus);
        assert_eq!("newton".parse::<HessianKind>().unwrap(), HessianKind::Newton);
        assert!("bfgs".parse::<HessianKind>().is_err());
    }
}

mod unbounded {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        v.is_finite().then_some(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}
