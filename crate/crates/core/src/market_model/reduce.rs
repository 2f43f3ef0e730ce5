use nalgebra::DMatrix;

use super::{Asset, BasketSpreadInstrument, Direction, MarketModel};
use crate::error::{Error, Result};

const TIME_TOLERANCE: f64 = 1e-12;

/// Asian basket spread: `[eta (sum_i sum_j w^B_i w^A_j S_i(t_j) - K)]^+`, with the
/// multiplicative strike applied to every negative contribution.
///
/// Times are year fractions from valuation. Observations at `t < 0` are in
/// the past and need a fixing; at `t = 0` a fixing is optional.
#[derive(Debug, Clone, PartialEq)]
pub struct AsianBasketSpec {
    pub obs_times: Vec<f64>,
    pub asian_weights: Vec<f64>,
    pub basket_weights: Vec<f64>,
    /// Per observation, the known value of each asset; empty when nothing is fixed.
    pub fixings: Vec<Option<Vec<f64>>>,
    pub strike: f64,
    pub mult_strike: f64,
    pub maturity: f64,
    pub direction: Direction,
}

impl AsianBasketSpec {
    /// Equal-weight average of one asset, no fixings.
    pub fn single_asset(obs_times: Vec<f64>, strike: f64, maturity: f64, direction: Direction) -> Self {
        let n = obs_times.len() as f64;
        Self {
            asian_weights: vec![1.0 / n; obs_times.len()],
            obs_times,
            basket_weights: vec![1.0],
            fixings: Vec::new(),
            strike,
            mult_strike: 1.0,
            maturity,
            direction,
        }
    }

    pub fn fixing(&self, j: usize) -> Option<&[f64]> {
        self.fixings.get(j).and_then(|f| f.as_deref())
    }

    pub fn validate(&self, n_assets: usize) -> Result<()> {
        let n = self.obs_times.len();
        if n == 0 {
            return Err(Error::validation("asian schedule needs at least one observation"));
        }
        if self.asian_weights.len() != n {
            return Err(Error::validation(format!("{} asian weights for {n} observations", self.asian_weights.len())));
        }
        if self.basket_weights.len() != n_assets {
            return Err(Error::validation(format!(
                "{} basket weights for {n_assets} assets",
                self.basket_weights.len()
            )));
        }
        if !self.fixings.is_empty() && self.fixings.len() != n {
            return Err(Error::validation(format!("{} fixing entries for {n} observations", self.fixings.len())));
        }
        if self.obs_times.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
            return Err(Error::validation("observation times must be strictly increasing"));
        }
        if self.obs_times.iter().any(|&t| !t.is_finite() || t > self.maturity + TIME_TOLERANCE) {
            return Err(Error::validation("observation times must not exceed maturity"));
        }
        if self.asian_weights.iter().chain(&self.basket_weights).any(|w| !w.is_finite()) {
            return Err(Error::validation("weights must be finite"));
        }
        if !(self.maturity.is_finite() && self.maturity > 0.0) {
            return Err(Error::validation("maturity must be > 0"));
        }
        Ok(())
    }
}

/// Deterministic contributions of past observations, split by leg sign.
///
/// `negative` is reported as a positive amount; the multiplicative strike is
/// applied to it later together with the rest of the negative leg.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FixedLegs {
    pub positive: f64,
    pub negative: f64,
}

impl FixedLegs {
    /// Amount to subtract from the additive strike when `kappa = 1`.
    pub fn strike_adjustment(&self) -> f64 {
        self.positive - self.negative
    }
}

/// Removes fixed observations from the schedule and accumulates their
/// weighted values per leg.
pub fn apply_fixings(spec: &AsianBasketSpec) -> Result<(AsianBasketSpec, FixedLegs)> {
    let m = spec.basket_weights.len();
    spec.validate(m)?;
    let mut fixed = FixedLegs::default();
    let mut out = AsianBasketSpec {
        obs_times: Vec::new(),
        asian_weights: Vec::new(),
        fixings: Vec::new(),
        ..spec.clone()
    };
    for (j, (&t, &wa)) in spec.obs_times.iter().zip(&spec.asian_weights).enumerate() {
        match spec.fixing(j) {
            Some(values) => {
                if t > TIME_TOLERANCE {
                    return Err(Error::Fixing(format!("fixing supplied for future observation at t = {t}")));
                }
                if values.len() != m {
                    return Err(Error::Fixing(format!(
                        "observation {j}: {} fixing values for {m} assets",
                        values.len()
                    )));
                }
                for (&wb, &x) in spec.basket_weights.iter().zip(values) {
                    if !(x.is_finite() && x >= 0.0) {
                        return Err(Error::Fixing(format!("observation {j}: fixing {x} must be finite and >= 0")));
                    }
                    let c = wa * wb * x;
                    if c > 0.0 {
                        fixed.positive += c;
                    } else {
                        fixed.negative -= c;
                    }
                }
            }
            None => {
                if t < -TIME_TOLERANCE {
                    return Err(Error::Fixing(format!("missing fixing for past observation at t = {t}")));
                }
                out.obs_times.push(t);
                out.asian_weights.push(wa);
            }
        }
    }
    Ok((out, fixed))
}

/// Single-asset Asian to basket: one pseudo-asset per observation.
pub fn reduce_asian(spec: &AsianBasketSpec, model: &MarketModel) -> Result<(BasketSpreadInstrument, MarketModel)> {
    if model.len() != 1 || spec.basket_weights.len() != 1 {
        return Err(Error::validation("reduce_asian expects a single-asset model"));
    }
    reduce_asian_basket(spec, model)
}

/// Asian basket to basket: pseudo-asset `i + n j` is asset `j` observed at
/// `t_i`, with forward `F_j(0, t_i)` and weight `w^A_i w^B_j`.
///
/// Each pseudo-asset carries its asset's volatility truncated at `t_i` and
/// the asset-level correlation, so its integrated covariance with pseudo-asset
/// `(k, l)` is `rho_{j,l} int_0^{t_i ^ t_k} sigma_j sigma_l ds`. Fixed
/// observations become one zero-volatility asset per leg.
pub fn reduce_asian_basket(
    spec: &AsianBasketSpec,
    model: &MarketModel,
) -> Result<(BasketSpreadInstrument, MarketModel)> {
    let m = model.len();
    spec.validate(m)?;
    let (future, fixed) = apply_fixings(spec)?;
    let n = future.obs_times.len();

    let mut assets = Vec::with_capacity(n * m + 2);
    let mut weights = Vec::with_capacity(n * m + 2);
    let mut owner = Vec::with_capacity(n * m + 2);
    for (j, asset) in model.assets().iter().enumerate() {
        for (&t, &wa) in future.obs_times.iter().zip(&future.asian_weights) {
            let w = wa * spec.basket_weights[j];
            if w == 0.0 {
                continue;
            }
            assets.push(Asset::new(asset.forward_at(t, spec.maturity), asset.vol.truncated(t)));
            weights.push(w);
            owner.push(Some(j));
        }
    }
    if fixed.positive > 0.0 {
        assets.push(Asset::constant(fixed.positive));
        weights.push(1.0);
        owner.push(None);
    }
    if fixed.negative > 0.0 {
        assets.push(Asset::constant(fixed.negative));
        weights.push(-1.0);
        owner.push(None);
    }
    if assets.is_empty() {
        return Err(Error::validation("asian basket has no nonzero contribution"));
    }

    let k = assets.len();
    let rho = model.correlation();
    let correlation = DMatrix::from_fn(k, k, |p, q| {
        if p == q {
            1.0
        } else {
            match (owner[p], owner[q]) {
                (Some(a), Some(b)) => rho[(a, b)],
                _ => 0.0,
            }
        }
    });
    let reduced = MarketModel::new_unchecked(assets, correlation, model.discount_factor());
    let instrument = BasketSpreadInstrument {
        weights,
        strike: spec.strike,
        mult_strike: spec.mult_strike,
        maturity: spec.maturity,
        direction: spec.direction,
    };
    instrument.validate()?;
    Ok((instrument, reduced))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_model::{canonical_covariance, VolCurve};

    fn flat_model(vol: f64, forward: f64, carry: f64) -> MarketModel {
        MarketModel::new(
            vec![Asset::new(forward, VolCurve::flat(vol).unwrap()).with_carry(carry)],
            DMatrix::identity(1, 1),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn two_observation_correlation() {
        let spec = AsianBasketSpec::single_asset(vec![0.5, 1.0], 100.0, 1.0, Direction::Call);
        let (_, reduced) = reduce_asian(&spec, &flat_model(0.3, 100.0, 0.0)).unwrap();
        let cov = canonical_covariance(&reduced, 1.0).unwrap();
        let rho = cov.get(0, 1) / (cov.get(0, 0) * cov.get(1, 1)).sqrt();
        assert!((rho - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn single_observation_is_vanilla() {
        let spec = AsianBasketSpec::single_asset(vec![1.0], 100.0, 1.0, Direction::Call);
        let model = flat_model(0.3, 105.0, 0.05);
        let (instr, reduced) = reduce_asian(&spec, &model).unwrap();
        assert_eq!(instr.weights, vec![1.0]);
        assert_eq!(reduced.assets()[0].forward, 105.0);
        let cov = canonical_covariance(&reduced, 1.0).unwrap();
        assert!((cov.get(0, 0) - 0.09).abs() < 1e-15);
    }

    #[test]
    fn forwards_follow_carry() {
        let spec = AsianBasketSpec::single_asset(vec![0.25, 1.0], 0.0, 1.0, Direction::Call);
        let (_, reduced) = reduce_asian(&spec, &flat_model(0.3, 100.0, 0.04)).unwrap();
        assert!((reduced.assets()[0].forward - 100.0 * (-0.04f64 * 0.75).exp()).abs() < 1e-12);
    }

    #[test]
    fn no_fixings_is_identity() {
        let spec = AsianBasketSpec::single_asset(vec![0.5, 1.0], 1.0, 1.0, Direction::Call);
        let (out, fixed) = apply_fixings(&spec).unwrap();
        assert_eq!(out.obs_times, spec.obs_times);
        assert_eq!(fixed, FixedLegs::default());
    }

    #[test]
    fn fixings_split_by_leg() {
        let spec = AsianBasketSpec {
            obs_times: vec![-0.5, 0.0, 0.5],
            asian_weights: vec![0.5, 0.25, 0.25],
            basket_weights: vec![1.0, -2.0],
            fixings: vec![Some(vec![10.0, 3.0]), None, None],
            strike: 0.0,
            mult_strike: 1.0,
            maturity: 1.0,
            direction: Direction::Call,
        };
        let (out, fixed) = apply_fixings(&spec).unwrap();
        assert_eq!(out.obs_times, vec![0.0, 0.5]);
        assert_eq!(fixed.positive, 5.0);
        assert_eq!(fixed.negative, 3.0);
        assert_eq!(fixed.strike_adjustment(), 2.0);
    }

    #[test]
    fn fixing_errors() {
        let mut spec = AsianBasketSpec::single_asset(vec![-0.1, 0.5], 1.0, 1.0, Direction::Call);
        assert!(matches!(apply_fixings(&spec), Err(Error::Fixing(_))));
        spec.fixings = vec![None, Some(vec![1.0])];
        assert!(matches!(apply_fixings(&spec), Err(Error::Fixing(_))));
    }

    #[test]
    fn all_fixed_leaves_constants_only() {
        let mut spec = AsianBasketSpec::single_asset(vec![-0.5, -0.25], 90.0, 1.0, Direction::Call);
        spec.fixings = vec![Some(vec![100.0]), Some(vec![104.0])];
        let (instr, reduced) = reduce_asian(&spec, &flat_model(0.3, 100.0, 0.0)).unwrap();
        assert_eq!(instr.weights, vec![1.0]);
        assert_eq!(reduced.assets()[0].forward, 102.0);
        assert!(reduced.assets()[0].vol.is_zero());
    }

    #[test]
    fn rejects_observation_after_maturity() {
        let spec = AsianBasketSpec::single_asset(vec![0.5, 1.5], 1.0, 1.0, Direction::Call);
        assert!(reduce_asian(&spec, &flat_model(0.3, 100.0, 0.0)).is_err());
    }
}
