//! Kernel execution policy.
//!
//! Sequential kernels use a fixed summation order, so results are bitwise
//! reproducible. The parallel policy partitions rows across a rayon pool; the
//! row-wise products stay bitwise identical while the transposed products are
//! reduced over a fixed number of chunks, which changes the summation order and
//! only agrees with the sequential path to roughly 1e-12 relative.
//!
//! Without the `parallel` cargo feature every policy runs sequentially.

use serde::{Deserialize, Serialize};

/// Environment variable that enables the parallel kernels with the given
/// number of worker threads.
pub const THREADS_ENV: &str = "MANIFOLD_ISQA_THREADS";

/// Rows are split into this many chunks for transposed reductions, independent
/// of the pool size, so the parallel result does not depend on thread count.
pub(crate) const REDUCTION_CHUNKS: usize = 64;

/// Below this many stored entries parallel dispatch costs more than it saves.
pub(crate) const MIN_PARALLEL_NNZ: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parallelism {
    #[default]
    Sequential,
    Rows,
}

impl Parallelism {
    /// Reads [`THREADS_ENV`]; a positive thread count selects [`Parallelism::Rows`]
    /// and sizes the global pool (first call wins).
    pub fn from_env() -> Self {
        match std::env::var(THREADS_ENV).ok().and_then(|s| s.trim().parse::<usize>().ok()) {
            Some(n) if n > 0 => {
                init_pool(n);
                Parallelism::Rows
            }
            _ => Parallelism::Sequential,
        }
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Rows
    }
}

#[cfg(feature = "parallel")]
fn init_pool(threads: usize) {
    // An already-initialized global pool is fine.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
}

#[cfg(not(feature = "parallel"))]
fn init_pool(_threads: usize) {}

/// Maps `f` over `items`, in parallel when the `parallel` feature is enabled.
/// Output order always matches input order.
pub fn map_collect<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
