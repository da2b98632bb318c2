//! Synthetic instances with closed-form solutions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hessian_ops::DenseOperator;
use crate::linalg::{sign, soft_threshold};
use crate::problem::{CompositeProblem, QuadraticQuartic};
use crate::regularizer::{L1Regularizer, SupportPattern};

/// Largest stationarity residual a generated solution may have.
pub const CERTIFY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    /// `sum_i c_i (x_i - a_i)^2 + lambda ||x||_1`.
    SeparableQuadraticL1,
    /// `1/2 (x-a)^T P (x-a) + lambda ||x||_1` with `P` spread over `[mu, 10 mu]`.
    RandomStronglyConvexL1,
    /// A quartic block (growth of order four), a rank-one pair whose solution
    /// set is a segment, and a block of coordinates that vanish at the solution.
    DegeneratePsdL1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    pub dimension: usize,
    /// Strong convexity modulus; unused by the degenerate family.
    pub mu: f64,
    pub seed: u64,
    pub lambda: f64,
}

impl SyntheticSpec {
    pub fn new(kind: SyntheticKind, dimension: usize, mu: f64, seed: u64) -> Self {
        Self {
            kind,
            dimension,
            mu,
            seed,
            lambda: 1.0,
        }
    }
}

/// `zeta dist(x, Omega) <= (F(x) - F*)^theta` on `F(x) - F* <= xi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sharpness {
    pub zeta: f64,
    pub theta: f64,
    pub xi: f64,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub id: String,
    pub spec: SyntheticSpec,
    pub problem: CompositeProblem<QuadraticQuartic>,
    pub solution: Vec<f64>,
    /// Other endpoint when the solution set is a segment.
    pub solution_end: Option<Vec<f64>>,
    pub fstar: f64,
    pub sharpness: Sharpness,
    pub x0: Vec<f64>,
}

impl Instance {
    pub fn support(&self) -> SupportPattern {
        SupportPattern::of(&self.solution)
    }

    /// Largest stationarity residual over the known solutions.
    pub fn certificate(&self) -> f64 {
        let mut r = self.problem.stationarity(&self.solution);
        if let Some(end) = &self.solution_end {
            r = r.max(self.problem.stationarity(end));
        }
        r
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        crate::linalg::dist(x, &self.solution)
    }
}

/// `min (x1 - 2.5)^2 + (x2 - 0.3)^2 + ||x||_1`, solved by `(2, 0)`.
pub fn example_one() -> Instance {
    let spec = SyntheticSpec::new(SyntheticKind::SeparableQuadraticL1, 2, 2.0, 0);
    let problem = CompositeProblem::new(
        QuadraticQuartic::separable(&[1.0, 1.0], &[2.5, 0.3]).expect("valid"),
        L1Regularizer::new(1.0).expect("valid"),
    );
    let solution = vec![2.0, 0.0];
    Instance {
        id: "example1".into(),
        spec,
        fstar: problem.objective(&solution),
        problem,
        solution,
        solution_end: None,
        sharpness: Sharpness {
            zeta: 1.0,
            theta: 0.5,
            xi: f64::INFINITY,
        },
        x0: vec![0.0, 0.0],
    }
}

pub fn gen_instance(spec: &SyntheticSpec) -> Result<Instance> {
    if spec.dimension == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let reg = L1Regularizer::new(spec.lambda)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let inst = match spec.kind {
        SyntheticKind::SeparableQuadraticL1 => separable(spec, reg, &mut rng)?,
        SyntheticKind::RandomStronglyConvexL1 => strongly_convex(spec, reg, &mut rng)?,
        SyntheticKind::DegeneratePsdL1 => degenerate(spec, reg, &mut rng)?,
    };
    let r = inst.certificate();
    if !(r < CERTIFY_TOL) {
        return Err(Error::Degenerate(format!("{}: solution residual {r:e}", inst.id)));
    }
    Ok(inst)
}

fn id_of(spec: &SyntheticSpec) -> String {
    let kind = match spec.kind {
        SyntheticKind::SeparableQuadraticL1 => "separable",
        SyntheticKind::RandomStronglyConvexL1 => "strongly_convex",
        SyntheticKind::DegeneratePsdL1 => "degenerate",
    };
    format!("{kind}-d{}-s{}", spec.dimension, spec.seed)
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn signed(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let v = uniform(rng, lo, hi);
    if rng.random::<bool>() {
        v
    } else {
        -v
    }
}

fn need_mu(spec: &SyntheticSpec) -> Result<()> {
    if spec.mu > 0.0 && spec.mu.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument("this family needs mu > 0".into()))
    }
}

fn separable(spec: &SyntheticSpec, reg: L1Regularizer, rng: &mut ChaCha8Rng) -> Result<Instance> {
    need_mu(spec)?;
    let d = spec.dimension;
    let lambda = reg.lambda();
    // c_0 pins the smallest curvature 2 c_i at mu
    let c: Vec<f64> = (0..d)
        .map(|i| if i == 0 { 0.5 * spec.mu } else { 0.5 * spec.mu * uniform(rng, 1.0, 4.0) })
        .collect();
    let a: Vec<f64> = (0..d).map(|_| signed(rng, 0.0, 3.0)).collect();
    let solution: Vec<f64> = (0..d).map(|i| soft_threshold(a[i], lambda / (2.0 * c[i]))).collect();
    let problem = CompositeProblem::new(QuadraticQuartic::separable(&c, &a)?, reg);
    Ok(Instance {
        id: id_of(spec),
        spec: *spec,
        fstar: problem.objective(&solution),
        problem,
        solution,
        solution_end: None,
        sharpness: Sharpness {
            zeta: (0.5 * spec.mu).sqrt(),
            theta: 0.5,
            xi: f64::INFINITY,
        },
        x0: vec![0.0; d],
    })
}

/// Random SPD matrix `Q diag(eig) Q^T` with eigenvalues evenly spread over
/// `[lo, hi]`. Returns the matrix and its inverse.
pub fn random_spd(d: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> (DenseOperator, Vec<f64>) {
    let a: Vec<f64> = (0..d * d).map(|_| rng.random::<f64>() - 0.5).collect();
    let q = nalgebra::DMatrix::from_row_slice(d, d, &a).qr().q();
    let eig: Vec<f64> = (0..d)
        .map(|i| if d == 1 { lo } else { lo + (hi - lo) * i as f64 / (d - 1) as f64 })
        .collect();
    let mut data = vec![0.0; d * d];
    let mut inv = vec![0.0; d * d];
    for i in 0..d {
        for j in i..d {
            let (mut s, mut t) = (0.0, 0.0);
            for k in 0..d {
                let qq = q[(i, k)] * q[(j, k)];
                s += qq * eig[k];
                t += qq / eig[k];
            }
            data[i * d + j] = s;
            data[j * d + i] = s;
            inv[i * d + j] = t;
            inv[j * d + i] = t;
        }
    }
    let op = DenseOperator::new(d, data).expect("square").with_spectrum((lo, hi));
    (op, inv)
}

/// Picks `x*` and an optimality-certifying gradient `g*` first, then solves
/// `P (x* - a) = g*` for the center `a`.
fn strongly_convex(spec: &SyntheticSpec, reg: L1Regularizer, rng: &mut ChaCha8Rng) -> Result<Instance> {
    need_mu(spec)?;
    let d = spec.dimension;
    let lambda = reg.lambda();
    let (p, p_inv) = random_spd(d, spec.mu, 10.0 * spec.mu, rng);
    let mut solution = vec![0.0; d];
    let mut g = vec![0.0; d];
    for i in 0..d {
        if rng.random::<f64>() < 0.35 {
            solution[i] = signed(rng, 0.5, 2.0);
            g[i] = -lambda * sign(solution[i]);
        } else {
            g[i] = signed(rng, 0.0, 0.5 * lambda);
        }
    }
    if solution.iter().all(|&v| v == 0.0) {
        solution[0] = 1.0;
        g[0] = -lambda;
    }
    let center: Vec<f64> = (0..d)
        .map(|i| solution[i] - (0..d).map(|j| p_inv[i * d + j] * g[j]).sum::<f64>())
        .collect();
    let smooth = QuadraticQuartic::new(p.data().to_vec(), center, vec![0.0; d], vec![0.0; d])?;
    let problem = CompositeProblem::new(smooth, reg);
    Ok(Instance {
        id: id_of(spec),
        spec: *spec,
        fstar: problem.objective(&solution),
        problem,
        solution,
        solution_end: None,
        sharpness: Sharpness {
            zeta: (0.5 * spec.mu).sqrt(),
            theta: 0.5,
            xi: f64::INFINITY,
        },
        x0: vec![0.0; d],
    })
}

/// Coordinates 0 and 1 carry `s/2 (x0 + x1 - c)^2`, minimized over the
/// segment `x0 + x1 = c - lambda/s`, `x0, x1 >= 0`. The next block carries
/// `w_i (x_i - a_i)^4 - lambda sign(a_i) x_i`, whose minimizer `a_i` has
/// zero curvature. The remaining coordinates are quadratic and vanish.
fn degenerate(spec: &SyntheticSpec, reg: L1Regularizer, rng: &mut ChaCha8Rng) -> Result<Instance> {
    let d = spec.dimension;
    if d < 3 {
        return Err(Error::InvalidArgument("degenerate family needs dimension >= 3".into()));
    }
    let lambda = reg.lambda();
    let quartic_end = 2 + (d - 1) / 2;
    let mut p = vec![0.0; d * d];
    let mut center = vec![0.0; d];
    let mut linear = vec![0.0; d];
    let mut quartic = vec![0.0; d];
    let mut solution = vec![0.0; d];

    let s = 2.0;
    let t_star = uniform(rng, 1.0, 1.5);
    let c = t_star + lambda / s;
    for i in 0..2 {
        for j in 0..2 {
            p[i * d + j] = s;
        }
        center[i] = 0.5 * c;
    }
    solution[0] = t_star;
    let mut end = vec![0.0; d];
    end[1] = t_star;

    let mut w_min = f64::INFINITY;
    for i in 2..quartic_end {
        let a = signed(rng, 0.5, 1.5);
        let w = uniform(rng, 0.5, 1.5);
        w_min = w_min.min(w);
        center[i] = a;
        quartic[i] = w;
        linear[i] = -lambda * sign(a);
        solution[i] = a;
        end[i] = a;
    }
    for i in quartic_end..d {
        let ci = uniform(rng, 0.5, 1.5);
        p[i * d + i] = 2.0 * ci;
        center[i] = signed(rng, 0.0, 0.25 * lambda / (2.0 * ci));
    }

    let smooth = QuadraticQuartic::new(p, center, linear, quartic)?;
    let problem = CompositeProblem::new(smooth, reg);
    let fstar = problem.objective(&solution);
    Ok(Instance {
        id: id_of(spec),
        spec: *spec,
        fstar,
        problem,
        solution,
        solution_end: Some(end),
        sharpness: Sharpness {
            // local estimate from the quartic block
            zeta: w_min.powf(0.25),
            theta: 0.25,
            xi: 1.0,
        },
        x0: vec![0.0; d],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_one_is_certified() {
        let e = example_one();
        assert_eq!(e.certificate(), 0.0);
        assert_eq!(e.fstar, 0.25 + 0.09 + 2.0);
        assert_eq!(e.support().zero_set(), &[1]);
    }

    #[test]
    fn separable_reproduces_example_geometry() {
        let spec = SyntheticSpec::new(SyntheticKind::SeparableQuadraticL1, 6, 2.0, 3);
        let inst = gen_instance(&spec).unwrap();
        // soft threshold oracle against a brute-force 1-D scan
        for i in 0..6 {
            let mut best = (f64::INFINITY, 0.0);
            for k in -40_000..=40_000 {
                let v = k as f64 * 1e-4;
                let mut x = inst.solution.clone();
                x[i] = v;
                let f = inst.problem.objective(&x);
                if f < best.0 {
                    best = (f, v);
                }
            }
            assert!((best.1 - inst.solution[i]).abs() <= 1e-4);
        }
    }

    #[test]
    fn full_shrinkage_gives_zero() {
        let problem = CompositeProblem::new(
            QuadraticQuartic::separable(&[1.0, 2.0], &[0.4, -0.2]).unwrap(),
            L1Regularizer::new(1.0).unwrap(),
        );
        assert_eq!(problem.stationarity(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn families_are_certified_and_deterministic() {
        for kind in [
            SyntheticKind::SeparableQuadraticL1,
            SyntheticKind::RandomStronglyConvexL1,
            SyntheticKind::DegeneratePsdL1,
        ] {
            for seed in 0..10 {
                let spec = SyntheticSpec::new(kind, 12, 1.0, seed);
                let a = gen_instance(&spec).unwrap();
                let b = gen_instance(&spec).unwrap();
                assert_eq!(a.solution, b.solution);
                assert!(a.certificate() < CERTIFY_TOL);
                assert_eq!(a.fstar, a.problem.objective(&a.solution));
            }
        }
    }

    #[test]
    fn strongly_convex_solution_is_a_minimizer() {
        let inst = gen_instance(&SyntheticSpec::new(SyntheticKind::RandomStronglyConvexL1, 8, 1.0, 5)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let x: Vec<f64> = inst.solution.iter().map(|v| v + rng.random::<f64>() - 0.5).collect();
            let gap = inst.problem.objective(&x) - inst.fstar;
            // quadratic growth with zeta^2 = mu / 2
            assert!(gap >= 0.5 * inst.spec.mu * inst.distance(&x).powi(2) * (1.0 - 1e-9));
        }
    }

    #[test]
    fn degenerate_segment_endpoints_share_the_value() {
        let inst = gen_instance(&SyntheticSpec::new(SyntheticKind::DegeneratePsdL1, 9, 0.0, 2)).unwrap();
        let end = inst.solution_end.clone().unwrap();
        assert!((inst.problem.objective(&end) - inst.fstar).abs() <= 1e-14);
        let mid: Vec<f64> = inst.solution.iter().zip(&end).map(|(a, b)| 0.5 * (a + b)).collect();
        assert!(inst.problem.stationarity(&mid) < CERTIFY_TOL);
        // quartic growth along a single coordinate of the quartic block
        let mut x = inst.solution.clone();
        x[2] += 1e-2 * sign(x[2]);
        let gap = inst.problem.objective(&x) - inst.fstar;
        let w = gap / 1e-8;
        assert!(w > 0.4 && w < 1.6, "{w}");
    }

    #[test]
    fn random_spd_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (p, inv) = random_spd(5, 1.0, 7.0, &mut rng);
        let data = p.data();
        for i in 0..5 {
            for j in 0..5 {
                let v: f64 = (0..5).map(|k| data[i * 5 + k] * inv[k * 5 + j]).sum();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(gen_instance(&SyntheticSpec::new(SyntheticKind::SeparableQuadraticL1, 0, 1.0, 0)).is_err());
        assert!(gen_instance(&SyntheticSpec::new(SyntheticKind::RandomStronglyConvexL1, 3, 0.0, 0)).is_err());
        assert!(gen_instance(&SyntheticSpec::new(SyntheticKind::DegeneratePsdL1, 2, 0.0, 0)).is_err());
    }
}
