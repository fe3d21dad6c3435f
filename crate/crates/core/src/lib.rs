//! Cache-aware distance-matrix kernels.
//!
//! Every optimized kernel in this crate ships next to the naive multi-pass
//! routine it replaces, so the two can be compared for equivalence and speed:
//!
//! | workload   | reference                      | optimized                      |
//! |------------|--------------------------------|--------------------------------|
//! | validation | [`validate_naive`]             | [`validate_tiled`]             |
//! | centering  | [`centering::center_naive`]    | [`centering::center_fused`]    |
//! | Mantel     | [`mantel::mantel_naive`]       | [`mantel::mantel_fused`]       |
//!
//! Optimized kernels are data-parallel through rayon and run on whatever pool
//! is current; use [`with_threads`] to pin a worker count.

pub mod bench;
pub mod centering;
pub mod distmat;
mod error;
pub mod lsmat;
pub mod mantel;
pub mod pcoa;
mod real;

pub use distmat::{
    condensed_form, condensed_index, make_permutations, validate_naive,
    validate_naive_with_tolerance, validate_tiled, validate_tiled_with_tolerance, CondensedVector,
    DistanceMatrix, PermutationSet, ValidationReport,
};
pub use error::{Error, Result};
pub use real::Real;

/// Tile edge used by the blocked kernels unless configured otherwise.
///
/// 16x16 tiles of 8-byte elements are 2 KiB each, so the pair of tiles a
/// blocked loop touches stays well inside a 32 KiB L1 data cache.
pub const DEFAULT_TILE: usize = 16;

/// Resolves a requested worker count, where 0 means every available core.
pub fn effective_threads(threads: usize) -> usize {
    if threads > 0 {
        threads
    } else {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    }
}

/// Runs `f` inside a dedicated rayon pool with `threads` workers (0 = all cores).
pub fn with_threads<R, F>(threads: usize, f: F) -> Result<R>
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(effective_threads(threads))
        .build()
        .map_err(|e| Error::ThreadPool(e.to_string()))?;
    Ok(pool.install(f))
}
