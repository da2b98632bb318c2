//! Enlarging `H_t` when the unit step fails the sufficient-decrease test.
//!
//! Starting with `sigma = 1`:
//!
//! * `ScaleDown`: `sigma <- beta sigma`, `H <- H0 / sigma`.
//! * `ShiftIdentity`: `H <- H0 + I / sigma`, then `sigma <- beta sigma`.
//! * `Doubling`: `H <- 2 H` (the scale-down variant with `beta = 1/2`).

use serde::{Deserialize, Serialize};

use super::{CoordinateCache, HessianOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnlargementVariant {
    #[default]
    Doubling,
    ScaleDown,
    ShiftIdentity,
}

/// Enlargement state for one outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Enlargement {
    variant: EnlargementVariant,
    beta: f64,
    sigma: f64,
    scale: f64,
    shift: f64,
    rounds: usize,
}

impl Enlargement {
    pub fn new(variant: EnlargementVariant, beta: f64) -> Self {
        let beta = match variant {
            EnlargementVariant::Doubling => 0.5,
            _ => beta,
        };
        assert!(beta > 0.0 && beta < 1.0, "enlargement beta must lie in (0, 1)");
        Self {
            variant,
            beta,
            sigma: 1.0,
            scale: 1.0,
            shift: 0.0,
            rounds: 0,
        }
    }

    /// Performs one enlargement.
    pub fn advance(&mut self) {
        match self.variant {
            EnlargementVariant::Doubling | EnlargementVariant::ScaleDown => {
                self.sigma *= self.beta;
                self.scale = 1.0 / self.sigma;
            }
            EnlargementVariant::ShiftIdentity => {
                self.shift = 1.0 / self.sigma;
                self.sigma *= self.beta;
            }
        }
        self.rounds += 1;
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    /// `(scale, shift)` such that `H = scale * H0 + shift * I`.
    pub fn coefficients(&self) -> (f64, f64) {
        (self.scale, self.shift)
    }

    /// Worst-case number of rounds before the unit step is accepted, given the
    /// gradient Lipschitz constant `l` and the floor `m0` of `H0`. `None` when
    /// the bound is unavailable (`m0 = 0` for the scaling variants).
    pub fn round_bound(&self, l: f64, m0: f64) -> Option<usize> {
        let base = 1.0 / self.beta;
        let log = |v: f64| -> usize {
            if v <= 1.0 {
                0
            } else {
                (v.ln() / base.ln()).ceil() as usize
            }
        };
        match self.variant {
            EnlargementVariant::Doubling | EnlargementVariant::ScaleDown => {
                (m0 > 0.0 && l.is_finite()).then(|| log(l / m0))
            }
            EnlargementVariant::ShiftIdentity => l.is_finite().then(|| 1 + log(l)),
        }
    }

    pub fn wrap<'a>(&self, base: &'a dyn HessianOperator) -> Enlarged<'a> {
        Enlarged {
            base,
            scale: self.scale,
            shift: self.shift,
        }
    }
}

/// `scale * H0 + shift * I`.
pub struct Enlarged<'a> {
    base: &'a dyn HessianOperator,
    scale: f64,
    shift: f64,
}

impl<'a> Enlarged<'a> {
    pub fn new(base: &'a dyn HessianOperator, scale: f64, shift: f64) -> Self {
        Self { base, scale, shift }
    }
}

impl HessianOperator for Enlarged<'_> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        self.base.apply(v, out);
        for (o, x) in out.iter_mut().zip(v) {
            *o = self.scale * *o + self.shift * x;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        self.base
            .diagonal()
            .into_iter()
            .map(|d| self.scale * d + self.shift)
            .collect()
    }

    fn norm_bound(&self) -> f64 {
        self.scale * self.base.norm_bound() + self.shift
    }

    fn curvature_floor(&self) -> f64 {
        self.scale * self.base.curvature_floor() + self.shift
    }

    fn coordinate_cache(&self) -> Box<dyn CoordinateCache + '_> {
        Box::new(EnlargedCache {
            inner: self.base.coordinate_cache(),
            p: vec![0.0; self.dim()],
            scale: self.scale,
            shift: self.shift,
        })
    }

    fn column(&self, j: usize, out: &mut [f64]) {
        self.base.column(j, out);
        out.iter_mut().for_each(|o| *o *= self.scale);
        out[j] += self.shift;
    }
}

struct EnlargedCache<'a> {
    inner: Box<dyn CoordinateCache + 'a>,
    p: Vec<f64>,
    scale: f64,
    shift: f64,
}

impl CoordinateCache for EnlargedCache<'_> {
    fn hp(&self, j: usize) -> f64 {
        self.scale * self.inner.hp(j) + self.shift * self.p[j]
    }

    fn update(&mut self, j: usize, delta: f64) {
        self.inner.update(j, delta);
        self.p[j] += delta;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hessian_ops::{materialize, DenseOperator};

    fn h0() -> DenseOperator {
        DenseOperator::new(2, vec![2.0, 0.5, 0.5, 1.0]).unwrap()
    }

    #[test]
    fn shift_variant_adds_growing_identity() {
        let base = h0();
        let mut e = Enlargement::new(EnlargementVariant::ShiftIdentity, 0.5);
        e.advance();
        assert_eq!(materialize(&e.wrap(&base)), vec![3.0, 0.5, 0.5, 2.0]);
        e.advance();
        assert_eq!(materialize(&e.wrap(&base)), vec![4.0, 0.5, 0.5, 3.0]);
    }

    #[test]
    fn doubling_three_times_is_eight() {
        let base = h0();
        let mut e = Enlargement::new(EnlargementVariant::Doubling, 0.9);
        for _ in 0..3 {
            e.advance();
        }
        let m = materialize(&e.wrap(&base));
        assert_eq!(m, base.data().iter().map(|v| 8.0 * v).collect::<Vec<_>>());
        let w = e.wrap(&base);
        assert!((w.norm_bound() - 8.0 * base.norm_bound()).abs() < 1e-12);
    }

    #[test]
    fn round_bounds() {
        let e = Enlargement::new(EnlargementVariant::ScaleDown, 0.5);
        assert_eq!(e.round_bound(8.0, 1.0), Some(3));
        assert_eq!(e.round_bound(9.0, 1.0), Some(4));
        assert_eq!(e.round_bound(0.5, 1.0), Some(0));
        assert_eq!(e.round_bound(1.0, 0.0), None);
        let e = Enlargement::new(EnlargementVariant::ShiftIdentity, 0.5);
        assert_eq!(e.round_bound(4.0, 0.0), Some(3));
    }

    #[test]
    fn cache_matches_apply() {
        let base = h0();
        let w = Enlarged::new(&base, 3.0, 0.25);
        let mut c = w.coordinate_cache();
        c.update(0, 1.5);
        c.update(1, -0.5);
        let mut out = [0.0; 2];
        w.apply(&[1.5, -0.5], &mut out);
        assert!((c.hp(0) - out[0]).abs() < 1e-14 && (c.hp(1) - out[1]).abs() < 1e-14);
    }
}
