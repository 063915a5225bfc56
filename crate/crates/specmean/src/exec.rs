//! Deterministic batch execution.
//!
//! Monte Carlo index ranges are cut into fixed-size batches whose shape
//! depends only on the total sample count, and batch results are combined by
//! a fixed pairwise tree. Results are therefore bitwise identical whether the
//! batches run sequentially or on any number of rayon workers.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Samples per batch. Part of the determinism contract: changing this value
/// changes the reduction tree and may change results in the last bit.
pub const BATCH_SIZE: usize = 1024;

/// Half-open index ranges covering `[0, n_items)` in batches of [`BATCH_SIZE`].
pub fn batch_ranges(n_items: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n_items.div_ceil(BATCH_SIZE));
    let mut lo = 0;
    while lo < n_items {
        let hi = (lo + BATCH_SIZE).min(n_items);
        out.push((lo, hi));
        lo = hi;
    }
    out
}

/// Evaluate one closure per batch, collecting results in batch order.
pub fn map_batches<R: Send, F>(n_items: usize, f: F) -> Vec<R>
where
    F: Fn(usize, usize) -> R + Sync,
{
    let ranges = batch_ranges(n_items);
    #[cfg(feature = "parallel")]
    {
        ranges.into_par_iter().map(|(lo, hi)| f(lo, hi)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        ranges.into_iter().map(|(lo, hi)| f(lo, hi)).collect()
    }
}

/// Sequential twin of [`map_batches`], kept unconditionally for benchmarks
/// comparing the two execution modes.
pub fn map_batches_seq<R, F>(n_items: usize, f: F) -> Vec<R>
where
    F: Fn(usize, usize) -> R,
{
    batch_ranges(n_items)
        .into_iter()
        .map(|(lo, hi)| f(lo, hi))
        .collect()
}

/// Pairwise tree reduction with a shape fixed by the item count alone.
pub fn tree_combine<R, F>(mut items: Vec<R>, combine: F) -> Option<R>
where
    F: Fn(R, R) -> R,
{
    if items.is_empty() {
        return None;
    }
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut iter = items.into_iter();
        while let Some(a) = iter.next() {
            match iter.next() {
                Some(b) => next.push(combine(a, b)),
                None => next.push(a),
            }
        }
        items = next;
    }
    items.pop()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_cover_exactly() {
        for n in [0usize, 1, BATCH_SIZE - 1, BATCH_SIZE, BATCH_SIZE + 1, 5 * BATCH_SIZE + 7] {
            let ranges = batch_ranges(n);
            let total: usize = ranges.iter().map(|(lo, hi)| hi - lo).sum();
            assert_eq!(total, n);
            for w in ranges.windows(2) {
                assert_eq!(w[0].1, w[1].0);
            }
        }
    }

    #[test]
    fn tree_combine_is_shape_stable() {
        // Summing floats in tree order must not depend on how items were produced.
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 1e-3).collect();
        let a = tree_combine(xs.clone(), |x, y| x + y).unwrap();
        let b = tree_combine(xs, |x, y| x + y).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn parallel_and_sequential_agree_bitwise() {
        let f = |lo: usize, hi: usize| (lo..hi).map(|i| (i as f64).sqrt()).sum::<f64>();
        let par = map_batches(10_000, f);
        let seq = map_batches_seq(10_000, f);
        assert_eq!(par.len(), seq.len());
        for (a, b) in par.iter().zip(&seq) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
