use serde::Serialize;

use crate::error::{Error, Result};
use crate::expansion::sym_triple_sum;
use crate::market_model::ReducedBasket;
use crate::numeric::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorStats {
    pub rmse: f64,
    pub mae: f64,
}

/// Root mean square and maximum absolute error of `values` against `reference`.
///
/// # Panics
/// If the slices differ in length or are empty.
pub fn error_stats(values: &[f64], reference: &[f64]) -> ErrorStats {
    assert_eq!(values.len(), reference.len());
    assert!(!values.is_empty());
    let sq: CompensatedSum = values.iter().zip(reference).map(|(v, r)| (v - r) * (v - r)).collect();
    let mae = values.iter().zip(reference).map(|(v, r)| (v - r).abs()).fold(0.0, f64::max);
    ErrorStats { rmse: (sq.value() / values.len() as f64).sqrt(), mae }
}

/// Skewness of the terminal basket `sum_i w_i S_i(T)` (multiplicative strike
/// applied to the negative weights), from exact lognormal moments.
pub fn basket_skewness(basket: &ReducedBasket) -> Result<f64> {
    let weights = basket.instrument.effective_weights();
    let n = basket.len();
    let c: Vec<f64> = (0..n).map(|i| weights[i] * basket.forwards[i]).collect();
    let v = |i: usize, j: usize| basket.cov.get(i, j);
    let mut var = CompensatedSum::new();
    for i in 0..n {
        for j in 0..n {
            var.add(c[i] * c[j] * v(i, j).exp_m1());
        }
    }
    let var = var.value();
    if var.is_nan() || var <= 0.0 {
        return Err(Error::Domain("basket skewness is undefined for a zero-variance basket".into()));
    }
    let third = sym_triple_sum(n, |i, j, k| {
        let (a, b, d) = (v(i, j), v(i, k), v(j, k));
        c[i] * c[j] * c[k] * ((a + b + d).exp_m1() - a.exp_m1() - b.exp_m1() - d.exp_m1())
    });
    Ok(third / var.powf(1.5))
}
