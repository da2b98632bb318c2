use crate::hessian_ops::HessianOperator;
use crate::linalg::{axpy, dot, norm};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcgStatus {
    Converged,
    BudgetExhausted,
    NegativeCurvature,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcgResult {
    pub q: Vec<f64>,
    pub iterations: usize,
    /// `||H q + g||`, recomputed from scratch at exit.
    pub residual: f64,
    pub status: PcgStatus,
}

/// Newton stop threshold `0.1 min(||g||, ||g||^(1 + rho))`.
pub fn stop_threshold(g_norm: f64, rho: f64) -> f64 {
    0.1 * g_norm.min(g_norm.powf(1.0 + rho))
}

/// Preconditioned CG for `H q = -g` from `q = 0`, with a diagonal
/// preconditioner. Stops once `||H q + g|| <= threshold` or after `budget`
/// iterations; nonpositive curvature returns the current iterate.
pub fn pcg(op: &dyn HessianOperator, g: &[f64], precond: &[f64], threshold: f64, budget: usize) -> PcgResult {
    let d = g.len();
    let mut q = vec![0.0; d];
    // r = H q + g
    let mut r = g.to_vec();
    let inv: Vec<f64> = precond.iter().map(|&m| if m > 0.0 { 1.0 / m } else { 1.0 }).collect();
    let mut z: Vec<f64> = r.iter().zip(&inv).map(|(a, b)| a * b).collect();
    let mut dir: Vec<f64> = z.iter().map(|v| -v).collect();
    let mut rz = dot(&r, &z);
    let mut hd = vec![0.0; d];
    let mut iterations = 0;
    let mut status = PcgStatus::BudgetExhausted;

    loop {
        if norm(&r) <= threshold {
            status = PcgStatus::Converged;
            break;
        }
        if iterations >= budget {
            break;
        }
        op.apply(&dir, &mut hd);
        let curv = dot(&dir, &hd);
        if !(curv > 0.0) {
            status = PcgStatus::NegativeCurvature;
            break;
        }
        let step = rz / curv;
        axpy(step, &dir, &mut q);
        axpy(step, &hd, &mut r);
        iterations += 1;
        for i in 0..d {
            z[i] = r[i] * inv[i];
        }
        let rz_next = dot(&r, &z);
        let coef = rz_next / rz;
        rz = rz_next;
        for i in 0..d {
            dir[i] = -z[i] + coef * dir[i];
        }
    }

    let mut hq = vec![0.0; d];
    op.apply(&q, &mut hq);
    axpy(1.0, g, &mut hq);
    let residual = norm(&hq);
    if status == PcgStatus::Converged && residual > threshold {
        status = PcgStatus::BudgetExhausted;
    }
    PcgResult {
        q,
        iterations,
        residual,
        status,
    }
}
