//! Data-parallel helpers.
//!
//! With the `parallel` feature (default) the loops run on the rayon pool
//! whenever it has more than one thread; otherwise, and without the
//! feature, they run as plain sequential iterators. Reductions are always
//! ordered row by row so results do not depend on the partitioning.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this many elements a loop is not worth splitting.
#[cfg(feature = "parallel")]
const MIN_PARALLEL_LEN: usize = 4096;

#[cfg(feature = "parallel")]
#[inline]
fn use_pool(n: usize) -> bool {
    n >= MIN_PARALLEL_LEN && rayon::current_num_threads() > 1
}

/// Fill `out[k] = f(k)`.
pub fn fill<F>(out: &mut [f64], f: F)
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if use_pool(out.len()) {
        out.par_iter_mut().enumerate().for_each(|(k, o)| *o = f(k));
        return;
    }
    out.iter_mut().enumerate().for_each(|(k, o)| *o = f(k));
}

/// Build a vector of length `n` with `f(k)` at index `k`.
pub fn collect<F>(n: usize, f: F) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let mut out = vec![0.0; n];
    fill(&mut out, f);
    out
}

/// Apply `f(row_index, row)` to every row of length `width`.
pub fn for_each_row<T, F>(data: &mut [T], width: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if use_pool(data.len()) {
        data.par_chunks_mut(width)
            .enumerate()
            .for_each(|(j, row)| f(j, row));
        return;
    }
    data.chunks_mut(width)
        .enumerate()
        .for_each(|(j, row)| f(j, row));
}

/// Deterministic sum of `f(k)` over `0..n`: rows of `width` are summed
/// independently (possibly in parallel) and combined in row order.
pub fn sum<F>(n: usize, width: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let width = width.max(1);
    let rows = n.div_ceil(width);
    let row_sum = |j: usize| -> f64 {
        let lo = j * width;
        let hi = (lo + width).min(n);
        (lo..hi).map(&f).sum()
    };
    #[cfg(feature = "parallel")]
    if use_pool(n) {
        let partial: Vec<f64> = (0..rows).into_par_iter().map(row_sum).collect();
        return partial.iter().sum();
    }
    let partial: Vec<f64> = (0..rows).map(row_sum).collect();
    partial.iter().sum()
}

/// Deterministic maximum of `f(k)` over `0..n` (0 for empty input).
pub fn max<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if use_pool(n) {
        return (0..n).into_par_iter().map(f).reduce(|| 0.0, f64::max);
    }
    (0..n).map(f).fold(0.0, f64::max)
}

/// Map over a slice of independent items.
pub fn map_items<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if rayon::current_num_threads() > 1 {
        return items.par_iter().map(f).collect();
    }
    items.iter().map(f).collect()
}

/// Run `f` with every loop on the sequential path.
pub fn sequential<R, F>(f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(1).build() {
        return pool.install(f);
    }
    f()
}
