//! Double and triple sums over symmetric summands.
//!
//! A summand `f(i, j)` or `f(i, j, k)` that is invariant under permutation of
//! its indices only needs to be evaluated on sorted index tuples; the full
//! sum is recovered by weighting each tuple with its number of orderings.

use crate::numeric::CompensatedSum;

/// `sum_{i,j < m} f(i, j)` as `sum_i f(i, i) + 2 sum_{i > j} f(i, j)`.
pub fn sym_pair_sum<F: FnMut(usize, usize) -> f64>(m: usize, mut f: F) -> f64 {
    let mut diag = CompensatedSum::new();
    let mut off = CompensatedSum::new();
    for i in 0..m {
        diag.add(f(i, i));
        for j in 0..i {
            off.add(f(i, j));
        }
    }
    diag.value() + 2.0 * off.value()
}

/// Reference evaluation over all `m^2` ordered pairs.
pub fn full_pair_sum<F: FnMut(usize, usize) -> f64>(m: usize, mut f: F) -> f64 {
    let mut acc = CompensatedSum::new();
    for i in 0..m {
        for j in 0..m {
            acc.add(f(i, j));
        }
    }
    acc.value()
}

/// `sum_{i,j,k < m} f(i, j, k)` as
/// `6 sum_{i>j>k} f(i,j,k) + 3 sum_{i>j} f(i,j,j) + 3 sum_{i>j} f(i,i,j) + sum_i f(i,i,i)`.
///
/// Calls `f` exactly `(m^3 + 3m^2 + 2m) / 6` times.
pub fn sym_triple_sum<F: FnMut(usize, usize, usize) -> f64>(m: usize, mut f: F) -> f64 {
    let mut distinct = CompensatedSum::new();
    let mut paired = CompensatedSum::new();
    let mut diag = CompensatedSum::new();
    for i in 0..m {
        diag.add(f(i, i, i));
        for j in 0..i {
            paired.add(f(i, j, j));
            paired.add(f(i, i, j));
            for k in 0..j {
                distinct.add(f(i, j, k));
            }
        }
    }
    6.0 * distinct.value() + 3.0 * paired.value() + diag.value()
}

/// Reference evaluation over all `m^3` ordered triples.
pub fn full_triple_sum<F: FnMut(usize, usize, usize) -> f64>(m: usize, mut f: F) -> f64 {
    let mut acc = CompensatedSum::new();
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                acc.add(f(i, j, k));
            }
        }
    }
    acc.value()
}

/// Number of summand evaluations made by [`sym_triple_sum`].
pub const fn sym_triple_calls(m: usize) -> usize {
    (m * m * m + 3 * m * m + 2 * m) / 6
}
