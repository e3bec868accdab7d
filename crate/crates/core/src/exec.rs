//! Switch between rayon-backed and sequential execution of the hot loops.
//!
//! With the `parallel` feature disabled the crate is fully sequential. With
//! the feature enabled, rayon is used by default and can be turned off at
//! runtime with [`set_parallel`], which the benchmarks use to compare both
//! paths in a single run.
//!
//! Every parallel loop in the crate writes disjoint, deterministically
//! indexed outputs, so results are bit-identical regardless of the thread
//! count or execution mode.

use std::sync::atomic::{AtomicBool, Ordering};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

static PARALLEL: AtomicBool = AtomicBool::new(true);

/// Enable or disable rayon execution at runtime. No effect unless the
/// `parallel` feature is compiled in.
pub fn set_parallel(on: bool) {
    PARALLEL.store(on, Ordering::Relaxed);
}

/// True when work will actually be dispatched through rayon.
pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel") && PARALLEL.load(Ordering::Relaxed)
}

/// Chunk size for grid kernels. Fixed so that chunk-local state (e.g. the
/// memoized last g-value) never depends on the thread count.
pub(crate) const CHUNK: usize = 4096;

/// Fill `out` by applying `f` to fixed-size chunks. `f` receives the start
/// index of the chunk within the full slice.
pub(crate) fn fill_chunked<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    #[cfg(feature = "parallel")]
    if parallel_enabled() {
        out.par_chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(ci, chunk)| f(ci * CHUNK, chunk));
        return;
    }
    for (ci, chunk) in out.chunks_mut(CHUNK).enumerate() {
        f(ci * CHUNK, chunk);
    }
}

/// Map `f` over `0..n`, collecting results in index order.
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel_enabled() {
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}
