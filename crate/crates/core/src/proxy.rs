//! Lognormal proxy: each leg's arithmetic average is replaced by a
//! mean-matched geometric average, which makes the leg ratio lognormal.
//!
//! Notation follows the expansion formulas: `a_i` are the proxy exponents
//! (negative on the negative leg), `v_{i,l}` the integrated covariances,
//! `nu^2 = Var[ln G_p/G_n]`, `nu_p^2`, `nu_n^2` the per-leg log variances and
//! `nu_np^2 = -sum_{i<0<j} a_i a_j v_{i,j}` the cross term, so that
//! `nu^2 = nu_n^2 + nu_p^2 - 2 nu_np^2`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::black76::{black, BlackParams};
use crate::error::{Error, Result};
use crate::market_model::{Direction, ReducedBasket};
use crate::numeric::CompensatedSum;

/// Ratio variances at or below this are treated as a deterministic ratio.
pub const DETERMINISTIC_VARIANCE: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ProxyKind {
    /// Vorst geometric average, exponents equal to the normalized weights.
    #[default]
    Geometric,
    /// Exponents rescaled so each leg's log variance matches the arithmetic second moment.
    Levy,
}

impl std::fmt::Display for ProxyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProxyKind::Geometric => "geometric",
            ProxyKind::Levy => "levy",
        })
    }
}

/// Everything the expansions need, precomputed once.
///
/// Only assets with a nonzero folded weight are kept; indices refer to that
/// compacted list.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionInputs {
    pub proxy: ProxyKind,
    /// `sum_{w>0} w_i F_i`.
    pub a_p: f64,
    /// `-sum_{w<0} w_i F_i`.
    pub a_n: f64,
    /// Effective strike `A_n / A_p` (the multiplicative strike is already in the weights).
    pub kappa_star: f64,
    pub forwards: Vec<f64>,
    pub negative: Vec<bool>,
    /// `a~_i = w_i F_i / A_p` on the positive leg and `w_i F_i / A_n` on the negative leg.
    pub weights_norm: Vec<f64>,
    /// `a~*_i`: `a~_i` on the positive leg and `kappa* a~_i` on the negative leg.
    pub weights_star: Vec<f64>,
    /// Proxy exponents `a_i`, signed like the weights.
    pub exponents: Vec<f64>,
    pub cov: DMatrix<f64>,
    pub nu2: f64,
    pub nu2_p: f64,
    pub nu2_n: f64,
    pub nu2_np: f64,
    /// `v-bar_i = sum_l a_l v_{i,l}`.
    pub vbar: Vec<f64>,
    /// `v-bar^-_i = sum_{l in negative leg} a_l v_{i,l}`.
    pub vbar_neg: Vec<f64>,
    /// `G_p* = alpha prod_{positive} S*_i^{a_i}` has unit mean.
    pub alpha: f64,
    /// `G_n* = beta prod_{negative} S*_i^{|a_i|}` has unit mean.
    pub beta: f64,
    pub maturity: f64,
    pub direction: Direction,
    pub discount: f64,
}

/// Result of preparing a folded basket for the expansion.
#[derive(Debug, Clone, PartialEq)]
pub enum Prepared {
    Expansion(Box<ExpansionInputs>),
    /// No stochastic negative leg: the price is known exactly.
    Exact(f64),
}

impl ExpansionInputs {
    pub fn len(&self) -> usize {
        self.forwards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forwards.is_empty()
    }

    pub fn eta(&self) -> f64 {
        self.direction.eta()
    }

    pub fn is_deterministic_ratio(&self) -> bool {
        self.nu2 <= DETERMINISTIC_VARIANCE
    }

    /// `ln E[G_p*/G_n*] = -(nu_p^2 - nu_n^2 - nu^2)/2`.
    pub fn ln_mean_ratio(&self) -> f64 {
        -0.5 * (self.nu2_p - self.nu2_n - self.nu2)
    }

    /// `B max(eta (A_p - A_n), 0)`.
    pub fn intrinsic(&self) -> f64 {
        self.discount * (self.eta() * (self.a_p - self.a_n)).max(0.0)
    }

    /// `nu_n^2 + nu_p^2 - 2 nu_np^2 - nu^2`; zero up to rounding.
    pub fn decomposition_residual(&self) -> f64 {
        self.nu2_n + self.nu2_p - 2.0 * self.nu2_np - self.nu2
    }

    pub fn positive_leg(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| !self.negative[i])
    }

    pub fn negative_leg(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.negative[i])
    }
}

fn bilinear<I, J>(rows: I, cols: J, a: &[f64], cov: &DMatrix<f64>) -> f64
where
    I: Iterator<Item = usize> + Clone,
    J: Iterator<Item = usize> + Clone,
{
    let mut acc = CompensatedSum::new();
    for i in rows {
        for j in cols.clone() {
            acc.add(a[i] * a[j] * cov[(i, j)]);
        }
    }
    acc.value()
}

/// Prepares a folded basket (strike 0, multiplicative strike 1).
pub fn build_inputs(basket: &ReducedBasket, kind: ProxyKind) -> Result<Prepared> {
    let instrument = &basket.instrument;
    if !instrument.is_folded() {
        return Err(Error::validation("build_inputs expects a folded instrument (K = 0, kappa = 1)"));
    }
    if !instrument.weights.iter().any(|&w| w > 0.0) {
        return Err(Error::DegeneratePositiveLeg);
    }
    if !instrument.weights.iter().any(|&w| w < 0.0) {
        let a_p: f64 = instrument.weights.iter().zip(&basket.forwards).map(|(w, f)| w * f).sum();
        let value = match instrument.direction {
            Direction::Call => basket.discount * a_p,
            Direction::Put => 0.0,
        };
        return Ok(Prepared::Exact(value));
    }
    build_expansion_inputs(basket, kind).map(|e| Prepared::Expansion(Box::new(e)))
}

/// Builds [`ExpansionInputs`]; both legs must be nonempty.
pub fn build_expansion_inputs(basket: &ReducedBasket, kind: ProxyKind) -> Result<ExpansionInputs> {
    let keep: Vec<usize> = (0..basket.len()).filter(|&i| basket.instrument.weights[i] != 0.0).collect();
    let m = keep.len();
    let weights: Vec<f64> = keep.iter().map(|&i| basket.instrument.weights[i]).collect();
    let forwards: Vec<f64> = keep.iter().map(|&i| basket.forwards[i]).collect();
    let cov = DMatrix::from_fn(m, m, |i, j| basket.cov.get(keep[i], keep[j]));
    let negative: Vec<bool> = weights.iter().map(|&w| w < 0.0).collect();

    let a_p = crate::numeric::compensated_sum((0..m).filter(|&i| !negative[i]).map(|i| weights[i] * forwards[i]));
    let a_n = -crate::numeric::compensated_sum((0..m).filter(|&i| negative[i]).map(|i| weights[i] * forwards[i]));
    if a_p.is_nan() || a_p <= 0.0 {
        return Err(Error::DegeneratePositiveLeg);
    }
    if a_n.is_nan() || a_n <= 0.0 {
        return Err(Error::validation("negative leg is empty"));
    }
    let kappa_star = a_n / a_p;
    let weights_norm: Vec<f64> =
        (0..m).map(|i| weights[i] * forwards[i] / if negative[i] { a_n } else { a_p }).collect();
    let weights_star: Vec<f64> =
        (0..m).map(|i| if negative[i] { kappa_star * weights_norm[i] } else { weights_norm[i] }).collect();

    let pos = || (0..m).filter(|&i| !negative[i]);
    let neg = || (0..m).filter(|&i| negative[i]);

    let exponents = match kind {
        ProxyKind::Geometric => weights_norm.clone(),
        ProxyKind::Levy => {
            let mut a = weights_norm.clone();
            for (leg, indices) in [("positive", pos().collect::<Vec<_>>()), ("negative", neg().collect())] {
                let mut second = CompensatedSum::new();
                for &i in &indices {
                    for &j in &indices {
                        second.add(weights_norm[i] * weights_norm[j] * cov[(i, j)].exp());
                    }
                }
                let second = second.value();
                if !(second.is_finite() && second > 0.0) {
                    return Err(Error::LevyInfeasible { leg });
                }
                let target = second.ln();
                if target < -1e-14 {
                    return Err(Error::LevyInfeasible { leg });
                }
                let geometric = bilinear(indices.iter().copied(), indices.iter().copied(), &weights_norm, &cov);
                if geometric > 0.0 {
                    let scale = (target.max(0.0) / geometric).sqrt();
                    for &i in &indices {
                        a[i] *= scale;
                    }
                }
            }
            a
        }
    };

    let nu2_p = bilinear(pos(), pos(), &exponents, &cov);
    let nu2_n = bilinear(neg(), neg(), &exponents, &cov);
    let nu2_np = -bilinear(neg(), pos(), &exponents, &cov);
    let nu2 = bilinear(0..m, 0..m, &exponents, &cov);
    debug_assert!((nu2_n + nu2_p - 2.0 * nu2_np - nu2).abs() <= 1e-12 * nu2.abs().max(1.0));

    let vbar: Vec<f64> =
        (0..m).map(|i| crate::numeric::compensated_sum((0..m).map(|l| exponents[l] * cov[(i, l)]))).collect();
    let vbar_neg: Vec<f64> =
        (0..m).map(|i| crate::numeric::compensated_sum(neg().map(|l| exponents[l] * cov[(i, l)]))).collect();

    // E[prod S*^{c_i}] = exp(-1/2 sum c_i v_ii + 1/2 c' V c)
    let half_diag_p: f64 = pos().map(|i| 0.5 * exponents[i] * cov[(i, i)]).sum();
    let half_diag_n: f64 = neg().map(|i| -0.5 * exponents[i] * cov[(i, i)]).sum();
    let alpha = (half_diag_p - 0.5 * nu2_p).exp();
    let beta = (half_diag_n - 0.5 * nu2_n).exp();

    Ok(ExpansionInputs {
        proxy: kind,
        a_p,
        a_n,
        kappa_star,
        forwards,
        negative,
        weights_norm,
        weights_star,
        exponents,
        cov,
        nu2,
        nu2_p,
        nu2_n,
        nu2_np,
        vbar,
        vbar_neg,
        alpha,
        beta,
        maturity: basket.instrument.maturity,
        direction: basket.instrument.direction,
        discount: basket.discount,
    })
}

/// `A_p Black(1, kappa*, nu^2)`.
pub fn price_vg0(inputs: &ExpansionInputs) -> f64 {
    if inputs.is_deterministic_ratio() {
        return inputs.intrinsic();
    }
    let params = BlackParams {
        forward: 1.0,
        strike: inputs.kappa_star,
        variance: inputs.nu2,
        discount: inputs.discount,
        direction: inputs.direction,
    };
    inputs.a_p * black(&params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_model::{BasketSpreadInstrument, CovarianceMatrix};

    fn basket(weights: Vec<f64>, forwards: Vec<f64>, cov: &[f64], direction: Direction) -> ReducedBasket {
        let n = forwards.len();
        let cov = CovarianceMatrix::from_matrix(DMatrix::from_row_slice(n, n, cov), 1.0).unwrap();
        let instr = BasketSpreadInstrument::new(weights, 0.0, 1.0, direction).unwrap();
        ReducedBasket::from_parts(instr, forwards, cov, 0.95).unwrap()
    }

    fn expansion(b: &ReducedBasket, kind: ProxyKind) -> ExpansionInputs {
        match build_inputs(b, kind).unwrap() {
            Prepared::Expansion(e) => *e,
            Prepared::Exact(v) => panic!("unexpected exact {v}"),
        }
    }

    #[test]
    fn margrabe_inputs() {
        let b = basket(vec![-1.0, 1.0], vec![90.0, 100.0], &[0.04, 0.012, 0.012, 0.09], Direction::Call);
        let e = expansion(&b, ProxyKind::Geometric);
        assert_eq!(e.exponents, vec![-1.0, 1.0]);
        assert!((e.nu2 - (0.04 + 0.09 - 2.0 * 0.012)).abs() < 1e-15);
        assert!((e.kappa_star - 0.9).abs() < 1e-15);
        assert!(e.decomposition_residual().abs() < 1e-15);
        // single-asset legs: geometric mean is the asset, normalizations are 1
        assert!((e.alpha - 1.0).abs() < 1e-15 && (e.beta - 1.0).abs() < 1e-15);
    }

    #[test]
    fn normalized_weight_sums() {
        let b = basket(
            vec![-0.5, -1.5, 1.0, 2.0],
            vec![10.0, 20.0, 30.0, 5.0],
            &[0.04, 0.01, 0.0, 0.02, 0.01, 0.09, 0.01, 0.0, 0.0, 0.01, 0.16, 0.03, 0.02, 0.0, 0.03, 0.25],
            Direction::Call,
        );
        let e = expansion(&b, ProxyKind::Geometric);
        let pos: f64 = e.positive_leg().map(|i| e.weights_norm[i]).sum();
        let neg: f64 = e.negative_leg().map(|i| e.weights_norm[i]).sum();
        let neg_star: f64 = e.negative_leg().map(|i| e.weights_star[i]).sum();
        assert!((pos - 1.0).abs() < 1e-15);
        assert!((neg + 1.0).abs() < 1e-15);
        assert!((neg_star + e.kappa_star).abs() < 1e-15);
    }

    #[test]
    fn deterministic_negative_leg_degrades_gracefully() {
        let b = basket(vec![1.0, -1.0], vec![100.0, 95.0], &[0.09, 0.0, 0.0, 0.0], Direction::Call);
        let e = expansion(&b, ProxyKind::Geometric);
        assert_eq!(e.nu2_n, 0.0);
        assert_eq!(e.nu2_np, 0.0);
        assert!(e.vbar_neg.iter().all(|&v| v == 0.0));
        assert!((e.nu2 - 0.09).abs() < 1e-16);
    }

    #[test]
    fn empty_negative_leg_is_exact() {
        let b = basket(vec![1.0, 2.0], vec![100.0, 50.0], &[0.09, 0.0, 0.0, 0.04], Direction::Call);
        assert_eq!(build_inputs(&b, ProxyKind::Geometric).unwrap(), Prepared::Exact(0.95 * 200.0));
        let put = b.with_direction(Direction::Put);
        assert_eq!(build_inputs(&put, ProxyKind::Geometric).unwrap(), Prepared::Exact(0.0));
    }

    #[test]
    fn rejects_unfolded() {
        let b = basket(vec![-1.0, 1.0], vec![90.0, 100.0], &[0.04, 0.0, 0.0, 0.09], Direction::Call).with_strike(5.0);
        assert!(build_inputs(&b, ProxyKind::Geometric).is_err());
    }

    #[test]
    fn levy_matches_geometric_on_single_asset_legs() {
        let b = basket(vec![-1.0, 1.0], vec![90.0, 100.0], &[0.04, 0.012, 0.012, 0.09], Direction::Call);
        let g = expansion(&b, ProxyKind::Geometric);
        let l = expansion(&b, ProxyKind::Levy);
        for (x, y) in g.exponents.iter().zip(&l.exponents) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn levy_leg_variance_matches_second_moment() {
        let b = basket(
            vec![0.5, 0.5, -1.0],
            vec![100.0, 100.0, 95.0],
            &[0.09, 0.06, 0.0, 0.06, 0.16, 0.0, 0.0, 0.0, 0.0],
            Direction::Call,
        );
        let e = expansion(&b, ProxyKind::Levy);
        let second: f64 = [(0, 0), (0, 1), (1, 0), (1, 1)]
            .iter()
            .map(|&(i, j)| e.weights_norm[i] * e.weights_norm[j] * e.cov[(i, j)].exp())
            .sum();
        assert!((e.nu2_p - second.ln()).abs() < 1e-14);
    }

    #[test]
    fn zero_vol_vg0_is_intrinsic() {
        let b = basket(vec![1.0, -1.0], vec![100.0, 95.0], &[0.0; 4], Direction::Call);
        let e = expansion(&b, ProxyKind::Geometric);
        assert!(e.is_deterministic_ratio());
        assert!((price_vg0(&e) - 0.95 * 5.0).abs() < 1e-12);
        let p = expansion(&b.with_direction(Direction::Put), ProxyKind::Geometric);
        assert_eq!(price_vg0(&p), 0.0);
    }
}
