//! Curvature models `H_t` for the quadratic subproblem.
//!
//! Every operator is symmetric positive semidefinite and reports bounds
//! `curvature_floor() <= <v, Hv>/<v, v> <= norm_bound()`.

mod dense;
mod enlarge;
mod lbfgs;
mod newton;

pub use dense::DenseOperator;
pub use enlarge::{Enlarged, Enlargement, EnlargementVariant};
pub use lbfgs::LbfgsOperator;
pub use newton::{DampedNewtonOperator, DEFAULT_C, DEFAULT_RHO};

/// A symmetric PSD operator with diagonal and spectral-bound queries.
pub trait HessianOperator: Send + Sync {
    fn dim(&self) -> usize;

    /// `out = H v`
    fn apply(&self, v: &[f64], out: &mut [f64]);

    fn diagonal(&self) -> Vec<f64>;

    /// Upper bound `M_hat >= ||H||`.
    fn norm_bound(&self) -> f64;

    /// Lower bound `m_hat` with `H >= m_hat I`.
    fn curvature_floor(&self) -> f64;

    /// Incremental `(H p)_j` tracking for coordinate solvers, starting from `p = 0`.
    fn coordinate_cache(&self) -> Box<dyn CoordinateCache + '_> {
        Box::new(ColumnCache::new(self))
    }

    /// Column `j` of `H`.
    fn column(&self, j: usize, out: &mut [f64]) {
        let mut e = vec![0.0; self.dim()];
        e[j] = 1.0;
        self.apply(&e, out);
    }
}

impl<T: HessianOperator + ?Sized> HessianOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        (**self).apply(v, out)
    }

    fn diagonal(&self) -> Vec<f64> {
        (**self).diagonal()
    }

    fn norm_bound(&self) -> f64 {
        (**self).norm_bound()
    }

    fn curvature_floor(&self) -> f64 {
        (**self).curvature_floor()
    }

    fn coordinate_cache(&self) -> Box<dyn CoordinateCache + '_> {
        (**self).coordinate_cache()
    }

    fn column(&self, j: usize, out: &mut [f64]) {
        (**self).column(j, out)
    }
}

/// Maintains `H p` under single-coordinate changes of `p`.
pub trait CoordinateCache {
    fn hp(&self, j: usize) -> f64;

    /// Records `p_j += delta`.
    fn update(&mut self, j: usize, delta: f64);
}

/// Generic cache keeping the full `H p` vector, refreshed column by column.
pub struct ColumnCache<'a, O: HessianOperator + ?Sized> {
    op: &'a O,
    hp: Vec<f64>,
    col: Vec<f64>,
}

impl<'a, O: HessianOperator + ?Sized> ColumnCache<'a, O> {
    pub fn new(op: &'a O) -> Self {
        let d = op.dim();
        Self {
            op,
            hp: vec![0.0; d],
            col: vec![0.0; d],
        }
    }
}

impl<O: HessianOperator + ?Sized> CoordinateCache for ColumnCache<'_, O> {
    fn hp(&self, j: usize) -> f64 {
        self.hp[j]
    }

    fn update(&mut self, j: usize, delta: f64) {
        self.op.column(j, &mut self.col);
        crate::linalg::axpy(delta, &self.col, &mut self.hp);
    }
}

/// `H = s I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledIdentity {
    dim: usize,
    scale: f64,
}

impl ScaledIdentity {
    pub fn new(dim: usize, scale: f64) -> Self {
        assert!(scale > 0.0, "identity scale must be positive");
        Self { dim, scale }
    }
}

impl HessianOperator for ScaledIdentity {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        for (o, x) in out.iter_mut().zip(v) {
            *o = self.scale * x;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        vec![self.scale; self.dim]
    }

    fn norm_bound(&self) -> f64 {
        self.scale
    }

    fn curvature_floor(&self) -> f64 {
        self.scale
    }

    fn coordinate_cache(&self) -> Box<dyn CoordinateCache + '_> {
        Box::new(IdentityCache {
            scale: self.scale,
            p: vec![0.0; self.dim],
        })
    }

    fn column(&self, j: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        out[j] = self.scale;
    }
}

struct IdentityCache {
    scale: f64,
    p: Vec<f64>,
}

impl CoordinateCache for IdentityCache {
    fn hp(&self, j: usize) -> f64 {
        self.scale * self.p[j]
    }

    fn update(&mut self, j: usize, delta: f64) {
        self.p[j] += delta;
    }
}

/// Dense `d x d` matrix of any operator, built column by column. Test oracle.
pub fn materialize(op: &dyn HessianOperator) -> Vec<f64> {
    let d = op.dim();
    let mut m = vec![0.0; d * d];
    let mut col = vec![0.0; d];
    for j in 0..d {
        op.column(j, &mut col);
        for i in 0..d {
            m[i * d + j] = col[i];
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_operator() {
        let h = ScaledIdentity::new(3, 1.0);
        assert_eq!(h.diagonal(), vec![1.0; 3]);
        let mut out = vec![0.0; 3];
        h.apply(&[1.0, -2.0, 3.0], &mut out);
        assert_eq!(out, vec![1.0, -2.0, 3.0]);
        let mut c = h.coordinate_cache();
        c.update(1, 2.0);
        assert_eq!((c.hp(0), c.hp(1)), (0.0, 2.0));
    }

    #[test]
    fn generic_column_cache() {
        let h = DenseOperator::new(2, vec![2.0, 1.0, 1.0, 3.0]).unwrap();
        let mut c = ColumnCache::new(&h);
        c.update(0, 1.0);
        c.update(1, -1.0);
        assert_eq!((c.hp(0), c.hp(1)), (1.0, -2.0));
    }
}
