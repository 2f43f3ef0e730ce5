use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Pivots at or below this are treated as zero and truncate the factor.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Diagonally pivoted Cholesky of a PSD matrix.
///
/// Returns an `n x r` factor `L` with `L L' = A` up to the truncated residual,
/// where `r` is the numerical rank. Rows stay in the original order.
pub fn pivoted_cholesky(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut residual = a.clone();
    let mut used = vec![false; n];
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for _ in 0..n {
        let (p, pivot) = (0..n)
            .filter(|&i| !used[i])
            .map(|i| (i, residual[(i, i)]))
            .fold((usize::MAX, f64::NEG_INFINITY), |best, x| if x.1 > best.1 { x } else { best });
        if pivot < -PIVOT_TOLERANCE {
            return Err(Error::Factorization { pivot });
        }
        if pivot <= PIVOT_TOLERANCE {
            break;
        }
        if let Some(bad) = (0..n).filter(|&i| !used[i]).map(|i| residual[(i, i)]).find(|&d| d < -PIVOT_TOLERANCE) {
            return Err(Error::Factorization { pivot: bad });
        }
        let root = pivot.sqrt();
        let mut col = vec![0.0; n];
        for i in 0..n {
            if !used[i] {
                col[i] = residual[(i, p)] / root;
            }
        }
        col[p] = root;
        used[p] = true;
        for i in 0..n {
            if used[i] || col[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                if !used[j] {
                    residual[(i, j)] -= col[i] * col[j];
                }
            }
        }
        columns.push(col);
    }
    let r = columns.len();
    Ok(DMatrix::from_fn(n, r, |i, k| columns[k][i]))
}
