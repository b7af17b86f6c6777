//! Shared thread pool for data-parallel grid kernels.
//!
//! Kernels parallelize pure per-node (or per-plane) maps only; every
//! reduction in the crate runs sequentially in storage order, so results are
//! bit-identical for any thread count. `VEL_THREADS` caps the pool size.

use rayon::ThreadPool;
use std::sync::OnceLock;

static POOL: OnceLock<ThreadPool> = OnceLock::new();

pub fn pool() -> &'static ThreadPool {
    POOL.get_or_init(|| {
        let threads = std::env::var("VEL_THREADS")
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|&t| t > 0)
            .unwrap_or_else(|| {
                std::thread::available_parallelism()
                    .map(|p| p.get())
                    .unwrap_or(1)
            });
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool construction cannot fail with a positive thread count")
    })
}

/// Run `f(i3, plane)` over the mutable x3-planes of a buffer laid out
/// x1-fastest. Planes are disjoint, so the map is deterministic.
pub fn for_each_plane_mut(data: &mut [f64], plane_len: usize, f: impl Fn(usize, &mut [f64]) + Sync) {
    debug_assert_eq!(data.len() % plane_len, 0);
    pool().install(|| {
        use rayon::prelude::*;
        data.par_chunks_mut(plane_len)
            .enumerate()
            .for_each(|(i3, plane)| f(i3, plane));
    });
}
