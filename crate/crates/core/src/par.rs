//! Data-parallel execution helpers.
//!
//! `map_into_vec` preserves input order, and all mapped closures are pure,
//! so the parallel and sequential paths produce bit-identical output. The
//! `*_seq` variants always exist; they are the fallback used when the
//! `parallel` feature is disabled and the reference side of the criterion
//! benches.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Order-preserving map, sequential.
pub fn map_into_vec_seq<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.iter().map(f).collect()
}

/// Order-preserving map over a parallelizable workload.
#[cfg(feature = "parallel")]
pub fn map_into_vec<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_into_vec<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    map_into_vec_seq(items, f)
}

/// Order-preserving indexed map, sequential.
pub fn map_indices_seq<R: Send>(n: usize, f: impl Fn(usize) -> R + Sync + Send) -> Vec<R> {
    (0..n).map(f).collect()
}

/// Order-preserving indexed map.
#[cfg(feature = "parallel")]
pub fn map_indices<R: Send>(n: usize, f: impl Fn(usize) -> R + Sync + Send) -> Vec<R> {
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indices<R: Send>(n: usize, f: impl Fn(usize) -> R + Sync + Send) -> Vec<R> {
    map_indices_seq(n, f)
}
