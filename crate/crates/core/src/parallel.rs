//! Static work partitioning over a fixed number of workers.
//!
//! Work items are split into contiguous index ranges, one per worker, and
//! the per-range results are returned in range order. With the `parallel`
//! feature the ranges run on a rayon pool of the requested width; without
//! it they run one after another on the calling thread. Either way the
//! output depends only on the inputs, never on scheduling.

use std::ops::Range;

/// Splits `0..n` into `parts` contiguous ranges whose lengths differ by at
/// most one. Empty ranges are dropped.
pub fn split_ranges(n: u64, parts: usize) -> Vec<Range<u64>> {
    let parts = (parts.max(1) as u64).min(n.max(1));
    let base = n / parts;
    let extra = n % parts;
    let mut out = Vec::with_capacity(parts as usize);
    let mut start = 0;
    for i in 0..parts {
        let len = base + u64::from(i < extra);
        if len > 0 {
            out.push(start..start + len);
        }
        start += len;
    }
    out
}

/// Applies `f` to each of the `workers` ranges of `0..n` and returns the
/// results in range order.
pub fn map_ranges<T, F>(n: u64, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<u64>) -> T + Sync + Send,
{
    let ranges = split_ranges(n, workers);
    run(ranges, workers, f)
}

/// Applies `f` to every item, using up to `workers` threads, preserving order.
pub fn map_items<I, T, F>(items: &[I], workers: usize, f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    let chunks = map_ranges(items.len() as u64, workers, |r| {
        items[r.start as usize..r.end as usize].iter().map(&f).collect::<Vec<T>>()
    });
    chunks.into_iter().flatten().collect()
}

#[cfg(feature = "parallel")]
fn run<T, F>(ranges: Vec<Range<u64>>, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<u64>) -> T + Sync + Send,
{
    use rayon::prelude::*;
    if workers <= 1 || ranges.len() <= 1 {
        return ranges.into_iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| ranges.into_par_iter().map(&f).collect()),
        Err(_) => ranges.into_iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run<T, F>(ranges: Vec<Range<u64>>, _workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<u64>) -> T + Sync + Send,
{
    ranges.into_iter().map(f).collect()
}

/// Whether the crate was built with the rayon backend.
pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
