//! Market and instrument data, integrated covariances, and the reductions
//! that turn Asian and Asian-basket payoffs into a vanilla basket spread.
//!
//! Everything downstream consumes the integrated covariance matrix
//! `v_{i,l} = rho_{i,l} int_0^T sigma_i sigma_l ds`; volatilities and
//! correlations are never used directly after [`canonical_covariance`].

mod curve;
mod reduce;
pub mod schema;

pub use curve::{Segment, VolCurve};
pub use reduce::{apply_fixings, reduce_asian, reduce_asian_basket, AsianBasketSpec, FixedLegs};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the smallest eigenvalue of a correlation or covariance matrix.
pub const PSD_TOLERANCE: f64 = 1e-10;
const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Call,
    Put,
}

impl Direction {
    /// `+1` for a call, `-1` for a put.
    pub fn eta(self) -> f64 {
        match self {
            Direction::Call => 1.0,
            Direction::Put => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Direction::Call => Direction::Put,
            Direction::Put => Direction::Call,
        }
    }
}

/// One underlying: forward to the instrument maturity, volatility, and carry.
#[derive(Debug, Clone, PartialEq)]
pub struct Asset {
    /// `F(0, T)` for the instrument maturity `T`.
    pub forward: f64,
    pub vol: VolCurve,
    /// Continuously compounded carry `r - q`, used for forwards to other dates.
    pub carry: f64,
}

impl Asset {
    pub fn new(forward: f64, vol: VolCurve) -> Self {
        Self { forward, vol, carry: 0.0 }
    }

    pub fn with_carry(mut self, carry: f64) -> Self {
        self.carry = carry;
        self
    }

    /// Forward from a spot and flat rate and dividend yield: `F = S exp((r - q) T)`.
    pub fn from_spot(spot: f64, rate: f64, dividend: f64, vol: VolCurve, maturity: f64) -> Self {
        let carry = rate - dividend;
        Self { forward: spot * (carry * maturity).exp(), vol, carry }
    }

    /// Zero-volatility pseudo-asset paying a known amount.
    pub fn constant(value: f64) -> Self {
        Self { forward: value, vol: VolCurve::zero(), carry: 0.0 }
    }

    /// `F(0, t)` given that `forward` is `F(0, maturity)`.
    pub fn forward_at(&self, t: f64, maturity: f64) -> f64 {
        if self.carry == 0.0 || t == maturity {
            self.forward
        } else {
            self.forward * (self.carry * (t - maturity)).exp()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketModel {
    assets: Vec<Asset>,
    correlation: DMatrix<f64>,
    discount_factor: f64,
}

impl MarketModel {
    pub fn new(assets: Vec<Asset>, correlation: DMatrix<f64>, discount_factor: f64) -> Result<Self> {
        let n = assets.len();
        if n == 0 {
            return Err(Error::validation("market model needs at least one asset"));
        }
        if correlation.nrows() != n || correlation.ncols() != n {
            return Err(Error::validation(format!(
                "correlation is {}x{} but there are {n} assets",
                correlation.nrows(),
                correlation.ncols()
            )));
        }
        for (i, a) in assets.iter().enumerate() {
            if !(a.forward.is_finite() && a.forward > 0.0) {
                return Err(Error::validation(format!("asset {i}: forward must be > 0 (got {})", a.forward)));
            }
            if !a.carry.is_finite() {
                return Err(Error::validation(format!("asset {i}: carry must be finite")));
            }
        }
        if !(discount_factor.is_finite() && discount_factor > 0.0 && discount_factor <= 1.0) {
            return Err(Error::validation(format!(
                "discount factor must lie in (0, 1] (got {discount_factor})"
            )));
        }
        validate_correlation(&correlation)?;
        Ok(Self { assets, correlation, discount_factor })
    }

    /// Skips the correlation checks; for matrices that are PSD by construction.
    pub(crate) fn new_unchecked(assets: Vec<Asset>, correlation: DMatrix<f64>, discount_factor: f64) -> Self {
        debug_assert_eq!(assets.len(), correlation.nrows());
        Self { assets, correlation, discount_factor }
    }

    pub fn assets(&self) -> &[Asset] {
        &self.assets
    }

    pub fn correlation(&self) -> &DMatrix<f64> {
        &self.correlation
    }

    pub fn discount_factor(&self) -> f64 {
        self.discount_factor
    }

    pub fn len(&self) -> usize {
        self.assets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assets.is_empty()
    }

    /// Appends a zero-volatility asset, uncorrelated with everything.
    fn with_constant_asset(&self, value: f64) -> Self {
        let n = self.assets.len();
        let mut assets = self.assets.clone();
        assets.push(Asset::constant(value));
        let mut correlation = DMatrix::zeros(n + 1, n + 1);
        correlation.view_mut((0, 0), (n, n)).copy_from(&self.correlation);
        correlation[(n, n)] = 1.0;
        Self::new_unchecked(assets, correlation, self.discount_factor)
    }
}

fn validate_correlation(c: &DMatrix<f64>) -> Result<()> {
    let n = c.nrows();
    for i in 0..n {
        if (c[(i, i)] - 1.0).abs() > SYMMETRY_TOLERANCE {
            return Err(Error::validation(format!("correlation diagonal entry {i} is {} (expected 1)", c[(i, i)])));
        }
        for j in 0..n {
            let v = c[(i, j)];
            if !v.is_finite() || v.abs() > 1.0 + SYMMETRY_TOLERANCE {
                return Err(Error::validation(format!("correlation entry ({i},{j}) = {v} outside [-1, 1]")));
            }
            if (v - c[(j, i)]).abs() > SYMMETRY_TOLERANCE {
                return Err(Error::validation(format!("correlation is not symmetric at ({i},{j})")));
            }
        }
    }
    let min_eigenvalue = min_eigenvalue(c);
    if min_eigenvalue < -PSD_TOLERANCE {
        return Err(Error::NotPositiveSemidefinite { min_eigenvalue });
    }
    Ok(())
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    nalgebra::SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Integrated covariances `v_{i,j} = rho_{i,j} int_0^T sigma_i sigma_j ds`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    entries: DMatrix<f64>,
    maturity: f64,
}

impl CovarianceMatrix {
    /// Wraps a raw matrix after checking symmetry and positive semidefiniteness.
    pub fn from_matrix(entries: DMatrix<f64>, maturity: f64) -> Result<Self> {
        let n = entries.nrows();
        if entries.ncols() != n {
            return Err(Error::validation("covariance matrix must be square"));
        }
        for i in 0..n {
            for j in 0..i {
                if (entries[(i, j)] - entries[(j, i)]).abs() > SYMMETRY_TOLERANCE {
                    return Err(Error::validation(format!("covariance is not symmetric at ({i},{j})")));
                }
            }
        }
        if n > 0 {
            let min_eigenvalue = min_eigenvalue(&entries);
            if min_eigenvalue < -PSD_TOLERANCE {
                return Err(Error::NotPositiveSemidefinite { min_eigenvalue });
            }
        }
        Ok(Self { entries, maturity })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn maturity(&self) -> f64 {
        self.maturity
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn total_variance(&self, i: usize) -> f64 {
        self.entries[(i, i)]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&v| v == 0.0)
    }

    fn with_zero_row(&self) -> Self {
        let n = self.dim();
        let mut entries = DMatrix::zeros(n + 1, n + 1);
        entries.view_mut((0, 0), (n, n)).copy_from(&self.entries);
        Self { entries, maturity: self.maturity }
    }
}

/// Exact piecewise-constant integration of `rho_{i,j} sigma_i sigma_j` over `[0, maturity]`.
pub fn canonical_covariance(model: &MarketModel, maturity: f64) -> Result<CovarianceMatrix> {
    if !(maturity.is_finite() && maturity > 0.0) {
        return Err(Error::validation(format!("maturity must be > 0 (got {maturity})")));
    }
    let n = model.len();
    let assets = model.assets();
    let mut entries = DMatrix::zeros(n, n);
    for i in 0..n {
        entries[(i, i)] = assets[i].vol.total_variance(maturity);
        for j in 0..i {
            let rho = model.correlation[(i, j)];
            let v = if rho == 0.0 { 0.0 } else { rho * assets[i].vol.cross_integral(&assets[j].vol, maturity) };
            entries[(i, j)] = v;
            entries[(j, i)] = v;
        }
    }
    Ok(CovarianceMatrix { entries, maturity })
}

/// Payoff `[eta (sum_{w>0} w_i S_i + kappa sum_{w<0} w_i S_i - K)]^+` at `maturity`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasketSpreadInstrument {
    pub weights: Vec<f64>,
    pub strike: f64,
    pub mult_strike: f64,
    pub maturity: f64,
    pub direction: Direction,
}

impl BasketSpreadInstrument {
    pub fn new(weights: Vec<f64>, strike: f64, maturity: f64, direction: Direction) -> Result<Self> {
        let instrument = Self { weights, strike, mult_strike: 1.0, maturity, direction };
        instrument.validate()?;
        Ok(instrument)
    }

    pub fn with_mult_strike(mut self, kappa: f64) -> Result<Self> {
        self.mult_strike = kappa;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::validation("weights must be finite"));
        }
        if self.weights.iter().all(|&w| w == 0.0) {
            return Err(Error::validation("at least one weight must be nonzero"));
        }
        if !self.strike.is_finite() || !self.mult_strike.is_finite() {
            return Err(Error::validation("strike and multiplicative strike must be finite"));
        }
        if !(self.maturity.is_finite() && self.maturity > 0.0) {
            return Err(Error::validation(format!("maturity must be > 0 (got {})", self.maturity)));
        }
        Ok(())
    }

    /// Weights with the multiplicative strike applied to the negative leg.
    pub fn effective_weights(&self) -> Vec<f64> {
        self.weights
            .iter()
            .map(|&w| if w < 0.0 { self.mult_strike * w } else { w })
            .collect()
    }

    pub fn is_folded(&self) -> bool {
        self.strike == 0.0 && self.mult_strike == 1.0
    }
}

/// Strike pseudo-asset produced by folding: `(forward, weight)`.
fn strike_pseudo_asset(strike: f64) -> Option<(f64, f64)> {
    if strike > 0.0 {
        Some((strike, -1.0))
    } else if strike < 0.0 {
        Some((-strike, 1.0))
    } else {
        None
    }
}

/// Moves the additive strike into a zero-volatility asset and the
/// multiplicative strike into the negative-leg weights.
///
/// `K > 0` becomes an asset of forward `K` and weight `-1`, `K < 0` an asset
/// of forward `|K|` and weight `+1`. The strike asset is not scaled by the
/// multiplicative strike. The result has `K = 0` and `kappa = 1`.
pub fn fold_strike(
    instrument: &BasketSpreadInstrument,
    model: &MarketModel,
) -> Result<(BasketSpreadInstrument, MarketModel)> {
    instrument.validate()?;
    if instrument.weights.len() != model.len() {
        return Err(Error::validation("instrument weights and model assets differ in length"));
    }
    let mut weights = instrument.effective_weights();
    let model = match strike_pseudo_asset(instrument.strike) {
        Some((forward, weight)) => {
            weights.push(weight);
            model.with_constant_asset(forward)
        }
        None => model.clone(),
    };
    if !weights.iter().any(|&w| w > 0.0) {
        return Err(Error::DegeneratePositiveLeg);
    }
    let folded = BasketSpreadInstrument { weights, strike: 0.0, mult_strike: 1.0, ..instrument.clone() };
    Ok((folded, model))
}

/// The canonical pricing input: instrument, forwards to maturity, integrated
/// covariance and discount factor.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedBasket {
    pub instrument: BasketSpreadInstrument,
    pub forwards: Vec<f64>,
    pub cov: CovarianceMatrix,
    pub discount: f64,
}

impl ReducedBasket {
    pub fn new(instrument: &BasketSpreadInstrument, model: &MarketModel) -> Result<Self> {
        instrument.validate()?;
        if instrument.weights.len() != model.len() {
            return Err(Error::validation(format!(
                "{} weights for {} assets",
                instrument.weights.len(),
                model.len()
            )));
        }
        Ok(Self {
            instrument: instrument.clone(),
            forwards: model.assets().iter().map(|a| a.forward).collect(),
            cov: canonical_covariance(model, instrument.maturity)?,
            discount: model.discount_factor(),
        })
    }

    /// Builds directly from forwards and a covariance matrix.
    pub fn from_parts(
        instrument: BasketSpreadInstrument,
        forwards: Vec<f64>,
        cov: CovarianceMatrix,
        discount: f64,
    ) -> Result<Self> {
        instrument.validate()?;
        if forwards.len() != instrument.weights.len() || cov.dim() != forwards.len() {
            return Err(Error::validation("weights, forwards and covariance differ in dimension"));
        }
        if forwards.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(Error::validation("forwards must be > 0"));
        }
        if !(discount > 0.0 && discount <= 1.0) {
            return Err(Error::validation("discount factor must lie in (0, 1]"));
        }
        Ok(Self { instrument, forwards, cov, discount })
    }

    pub fn len(&self) -> usize {
        self.forwards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forwards.is_empty()
    }

    /// Same folding as [`fold_strike`], on the covariance representation.
    pub fn folded(&self) -> Result<ReducedBasket> {
        let mut weights = self.instrument.effective_weights();
        let mut forwards = self.forwards.clone();
        let cov = match strike_pseudo_asset(self.instrument.strike) {
            Some((forward, weight)) => {
                weights.push(weight);
                forwards.push(forward);
                self.cov.with_zero_row()
            }
            None => self.cov.clone(),
        };
        if !weights.iter().any(|&w| w > 0.0) {
            return Err(Error::DegeneratePositiveLeg);
        }
        let instrument =
            BasketSpreadInstrument { weights, strike: 0.0, mult_strike: 1.0, ..self.instrument.clone() };
        Ok(ReducedBasket { instrument, forwards, cov, discount: self.discount })
    }

    pub fn with_strike(&self, strike: f64) -> Self {
        let mut out = self.clone();
        out.instrument.strike = strike;
        out
    }

    pub fn with_mult_strike(&self, kappa: f64) -> Self {
        let mut out = self.clone();
        out.instrument.mult_strike = kappa;
        out
    }

    pub fn with_direction(&self, direction: Direction) -> Self {
        let mut out = self.clone();
        out.instrument.direction = direction;
        out
    }

    /// `sum_i w_i F_i - K` with the multiplicative strike applied: the forward of the payoff argument.
    pub fn forward_spread(&self) -> f64 {
        self.instrument
            .effective_weights()
            .iter()
            .zip(&self.forwards)
            .map(|(w, f)| w * f)
            .sum::<f64>()
            - self.instrument.strike
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_asset(rho: f64, s1: f64, s2: f64) -> MarketModel {
        MarketModel::new(
            vec![
                Asset::new(100.0, VolCurve::flat(s1).unwrap()),
                Asset::new(100.0, VolCurve::flat(s2).unwrap()),
            ],
            DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn flat_covariance_matches_table_setup() {
        let cov = canonical_covariance(&two_asset(0.28, 0.6, 0.6), 1.0).unwrap();
        assert!((cov.get(0, 1) - 0.1008).abs() < 1e-15);
        assert!((cov.get(0, 0) - 0.36).abs() < 1e-15);
    }

    #[test]
    fn zero_vol_gives_zero_row() {
        let model = MarketModel::new(
            vec![Asset::new(100.0, VolCurve::flat(0.3).unwrap()), Asset::constant(50.0)],
            DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]),
            0.9,
        )
        .unwrap();
        let cov = canonical_covariance(&model, 2.0).unwrap();
        assert_eq!(cov.get(1, 0), 0.0);
        assert_eq!(cov.get(1, 1), 0.0);
        assert_eq!(cov.get(0, 1), 0.0);
    }

    #[test]
    fn rejects_non_psd_correlation() {
        let c = DMatrix::from_row_slice(3, 3, &[1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0]);
        let assets = vec![Asset::new(1.0, VolCurve::flat(0.2).unwrap()); 3];
        match MarketModel::new(assets, c, 1.0) {
            Err(Error::NotPositiveSemidefinite { min_eigenvalue }) => assert!(min_eigenvalue < 0.0),
            other => panic!("expected PSD error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let assets = vec![Asset::new(-1.0, VolCurve::flat(0.2).unwrap())];
        assert!(MarketModel::new(assets, DMatrix::identity(1, 1), 1.0).is_err());
        let assets = vec![Asset::new(1.0, VolCurve::flat(0.2).unwrap())];
        assert!(MarketModel::new(assets.clone(), DMatrix::identity(1, 1), 1.5).is_err());
        assert!(MarketModel::new(assets, DMatrix::identity(2, 2), 1.0).is_err());
        assert!(BasketSpreadInstrument::new(vec![0.0, 0.0], 1.0, 1.0, Direction::Call).is_err());
        assert!(canonical_covariance(&two_asset(0.1, 0.2, 0.2), 0.0).is_err());
    }

    #[test]
    fn fold_negative_strike_joins_positive_leg() {
        let model = two_asset(0.28, 0.6, 0.6);
        let instr = BasketSpreadInstrument::new(vec![-1.0, 1.0], -100.0, 1.0, Direction::Call).unwrap();
        let (folded, fmodel) = fold_strike(&instr, &model).unwrap();
        assert_eq!(folded.weights, vec![-1.0, 1.0, 1.0]);
        assert_eq!(folded.strike, 0.0);
        assert_eq!(fmodel.assets()[2].forward, 100.0);
        assert!(fmodel.assets()[2].vol.is_zero());
        assert_eq!(fmodel.correlation()[(2, 0)], 0.0);
    }

    #[test]
    fn fold_zero_strike_is_identity() {
        let model = two_asset(0.28, 0.6, 0.6);
        let instr = BasketSpreadInstrument::new(vec![-1.0, 1.0], 0.0, 1.0, Direction::Call).unwrap();
        let (folded, fmodel) = fold_strike(&instr, &model).unwrap();
        assert_eq!(folded, instr);
        assert_eq!(fmodel, model);
    }

    #[test]
    fn fold_positive_strike_on_basket_makes_strike_the_negative_leg() {
        let model = two_asset(0.5, 0.2, 0.3);
        let instr = BasketSpreadInstrument::new(vec![0.5, 0.5], 50.0, 1.0, Direction::Call).unwrap();
        let (folded, _) = fold_strike(&instr, &model).unwrap();
        let negatives: Vec<usize> = (0..3).filter(|&i| folded.weights[i] < 0.0).collect();
        assert_eq!(negatives, vec![2]);
    }

    #[test]
    fn fold_applies_mult_strike_to_negative_leg_only() {
        let model = two_asset(0.5, 0.2, 0.3);
        let instr = BasketSpreadInstrument::new(vec![-1.0, 1.0], 10.0, 1.0, Direction::Call)
            .unwrap()
            .with_mult_strike(0.8)
            .unwrap();
        let (folded, _) = fold_strike(&instr, &model).unwrap();
        assert_eq!(folded.weights, vec![-0.8, 1.0, -1.0]);
    }

    #[test]
    fn fold_detects_empty_positive_leg() {
        let model = two_asset(0.5, 0.2, 0.3);
        let instr = BasketSpreadInstrument::new(vec![-1.0, -1.0], 10.0, 1.0, Direction::Put).unwrap();
        assert!(matches!(fold_strike(&instr, &model), Err(Error::DegeneratePositiveLeg)));
    }
}
