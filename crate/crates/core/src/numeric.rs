//! Deterministic reductions.
//!
//! Every mean in the crate goes through [`pairwise_sum`], so results do not
//! depend on thread count or on how a caller chunks its data.

const BLOCK: usize = 64;

/// Pairwise (cascade) summation. Error grows as O(log n) instead of O(n).
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of `f(x)` over `values` without allocating the mapped slice.
pub fn pairwise_sum_by<F>(values: &[f64], f: F) -> f64
where
    F: Fn(f64) -> f64 + Copy,
{
    if values.len() <= BLOCK {
        return values.iter().map(|&v| f(v)).sum();
    }
    let mid = values.len() / 2;
    pairwise_sum_by(&values[..mid], f) + pairwise_sum_by(&values[mid..], f)
}

/// Pairwise sum of `f(a, b)` over two equally long slices.
pub fn pairwise_sum_zip<F>(a: &[f64], b: &[f64], f: F) -> f64
where
    F: Fn(f64, f64) -> f64 + Copy,
{
    debug_assert_eq!(a.len(), b.len());
    if a.len() <= BLOCK {
        return a.iter().zip(b).map(|(&x, &y)| f(x, y)).sum();
    }
    let mid = a.len() / 2;
    pairwise_sum_zip(&a[..mid], &b[..mid], f) + pairwise_sum_zip(&a[mid..], &b[mid..], f)
}

/// Arithmetic mean via [`pairwise_sum`]. Returns 0 for an empty slice.
pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    pairwise_sum(values) / values.len() as f64
}
