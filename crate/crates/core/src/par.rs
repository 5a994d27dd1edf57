//! Thin parallel-map layer.
//!
//! All parallel work in the crate goes through these helpers. Each output
//! element is computed independently and written at its own index, and
//! reductions sum fixed-size chunks sequentially before combining the chunk
//! partials in index order, so results do not depend on the worker count.
//! Without the `parallel` feature everything runs on the calling thread.

/// Chunk length for ordered reductions. Changing it changes round-off, so it
/// is a constant rather than a tuning knob.
pub const REDUCE_CHUNK: usize = 1024;

#[cfg(feature = "parallel")]
pub fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Like [`map_indexed`], with at least `min_len` consecutive indices per task.
#[cfg(feature = "parallel")]
pub fn map_indexed_chunked<U, F>(n: usize, min_len: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().with_min_len(min_len.max(1)).map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed_chunked<U, F>(n: usize, _min_len: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..n).map(f).collect()
}

pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    map_indexed(items.len(), |i| f(&items[i]))
}

/// Ordered sum of `f(i)` for `i in 0..n`.
pub fn sum_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let n_chunks = n.div_ceil(REDUCE_CHUNK);
    let partials = map_indexed(n_chunks, |c| {
        let lo = c * REDUCE_CHUNK;
        let hi = (lo + REDUCE_CHUNK).min(n);
        let mut s = 0.0;
        for i in lo..hi {
            s += f(i);
        }
        s
    });
    partials.iter().sum()
}
