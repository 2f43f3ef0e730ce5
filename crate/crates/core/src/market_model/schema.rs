//! JSON file format for an instrument together with its market.
//!
//! ```json
//! {
//!   "assets": [{"forward": 105.13, "vol_segments": [[1.0, 0.6]], "carry": 0.05}],
//!   "correlation": [[1.0]],
//!   "discount_factor": 0.951229424500714,
//!   "weights": [1.0],
//!   "strike": 100.0,
//!   "mult_strike": 1.0,
//!   "maturity": 1.0,
//!   "direction": "call",
//!   "asian": {"obs_times": [0.5, 1.0], "asian_weights": [0.5, 0.5], "fixings": [null, null]}
//! }
//! ```
//!
//! `strike` defaults to 0, `mult_strike` to 1, `direction` to call and `carry`
//! to 0. With `asian` present, `weights` are the basket weights and each
//! asset's forward is to `maturity`; forwards to observation dates use `carry`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{
    reduce_asian_basket, AsianBasketSpec, Asset, BasketSpreadInstrument, Direction, MarketModel, ReducedBasket,
    VolCurve,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstrumentFile {
    pub assets: Vec<AssetEntry>,
    pub correlation: Vec<Vec<f64>>,
    pub discount_factor: f64,
    pub weights: Vec<f64>,
    #[serde(default)]
    pub strike: f64,
    #[serde(default = "default_mult_strike")]
    pub mult_strike: f64,
    pub maturity: f64,
    #[serde(default)]
    pub direction: Direction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asian: Option<AsianEntry>,
}

fn default_mult_strike() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetEntry {
    pub forward: f64,
    pub vol_segments: Vec<[f64; 2]>,
    #[serde(default)]
    pub carry: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsianEntry {
    pub obs_times: Vec<f64>,
    pub asian_weights: Vec<f64>,
    #[serde(default)]
    pub fixings: Vec<Option<FixingEntry>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FixingEntry {
    Single(f64),
    PerAsset(Vec<f64>),
}

impl FixingEntry {
    fn values(&self) -> Vec<f64> {
        match self {
            FixingEntry::Single(x) => vec![*x],
            FixingEntry::PerAsset(v) => v.clone(),
        }
    }
}

/// A parsed file: either a plain basket spread or an Asian basket spread.
#[derive(Debug, Clone, PartialEq)]
pub enum Priceable {
    Basket { instrument: BasketSpreadInstrument, model: MarketModel },
    Asian { spec: AsianBasketSpec, model: MarketModel },
}

impl Priceable {
    /// Reduces to the canonical basket (strike not yet folded).
    pub fn reduced(&self) -> Result<ReducedBasket> {
        match self {
            Priceable::Basket { instrument, model } => ReducedBasket::new(instrument, model),
            Priceable::Asian { spec, model } => {
                let (instrument, reduced) = reduce_asian_basket(spec, model)?;
                ReducedBasket::new(&instrument, &reduced)
            }
        }
    }

    pub fn model(&self) -> &MarketModel {
        match self {
            Priceable::Basket { model, .. } | Priceable::Asian { model, .. } => model,
        }
    }
}

impl InstrumentFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn market_model(&self) -> Result<MarketModel> {
        let n = self.assets.len();
        if self.correlation.len() != n || self.correlation.iter().any(|row| row.len() != n) {
            return Err(Error::Schema(format!("correlation must be a {n}x{n} matrix")));
        }
        let assets = self
            .assets
            .iter()
            .map(|a| {
                let points: Vec<(f64, f64)> = a.vol_segments.iter().map(|p| (p[0], p[1])).collect();
                Ok(Asset::new(a.forward, VolCurve::new(&points)?).with_carry(a.carry))
            })
            .collect::<Result<Vec<_>>>()?;
        let correlation = DMatrix::from_fn(n, n, |i, j| self.correlation[i][j]);
        MarketModel::new(assets, correlation, self.discount_factor)
    }

    pub fn to_priceable(&self) -> Result<Priceable> {
        let model = self.market_model()?;
        match &self.asian {
            None => {
                let instrument = BasketSpreadInstrument {
                    weights: self.weights.clone(),
                    strike: self.strike,
                    mult_strike: self.mult_strike,
                    maturity: self.maturity,
                    direction: self.direction,
                };
                instrument.validate()?;
                if instrument.weights.len() != model.len() {
                    return Err(Error::Schema(format!(
                        "{} weights for {} assets",
                        instrument.weights.len(),
                        model.len()
                    )));
                }
                Ok(Priceable::Basket { instrument, model })
            }
            Some(asian) => {
                let spec = AsianBasketSpec {
                    obs_times: asian.obs_times.clone(),
                    asian_weights: asian.asian_weights.clone(),
                    basket_weights: self.weights.clone(),
                    fixings: asian.fixings.iter().map(|f| f.as_ref().map(FixingEntry::values)).collect(),
                    strike: self.strike,
                    mult_strike: self.mult_strike,
                    maturity: self.maturity,
                    direction: self.direction,
                };
                spec.validate(model.len())?;
                Ok(Priceable::Asian { spec, model })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASKET: &str = r#"{
        "assets": [
            {"forward": 210.0, "vol_segments": [[1.0, 0.6]]},
            {"forward": 105.0, "vol_segments": [[0.5, 0.5], [1.0, 0.6]]}
        ],
        "correlation": [[1.0, 0.28], [0.28, 1.0]],
        "discount_factor": 0.95,
        "weights": [-1.0, 1.0],
        "strike": -100.0,
        "maturity": 1.0
    }"#;

    #[test]
    fn parses_basket_with_defaults() {
        let file = InstrumentFile::from_json(BASKET).unwrap();
        assert_eq!(file.mult_strike, 1.0);
        assert_eq!(file.direction, Direction::Call);
        match file.to_priceable().unwrap() {
            Priceable::Basket { instrument, model } => {
                assert_eq!(instrument.strike, -100.0);
                assert_eq!(model.len(), 2);
            }
            other => panic!("expected basket, got {other:?}"),
        }
    }

    #[test]
    fn parses_asian_with_scalar_fixings() {
        let text = r#"{
            "assets": [{"forward": 100.0, "vol_segments": [[1.0, 0.3]], "carry": 0.02}],
            "correlation": [[1.0]],
            "discount_factor": 1.0,
            "weights": [1.0],
            "strike": 95.0,
            "maturity": 1.0,
            "direction": "put",
            "asian": {"obs_times": [-0.5, 0.5, 1.0], "asian_weights": [0.3, 0.3, 0.4], "fixings": [98.0, null, null]}
        }"#;
        let p = InstrumentFile::from_json(text).unwrap().to_priceable().unwrap();
        let Priceable::Asian { spec, .. } = &p else { panic!("expected asian") };
        assert_eq!(spec.fixing(0), Some(&[98.0][..]));
        assert_eq!(spec.direction, Direction::Put);
        let reduced = p.reduced().unwrap();
        // two stochastic observations plus one fixed constant
        assert_eq!(reduced.len(), 3);
    }

    #[test]
    fn rejects_unknown_fields_and_bad_shapes() {
        let bad = BASKET.replace("\"maturity\"", "\"maturty\"");
        assert!(matches!(InstrumentFile::from_json(&bad), Err(Error::Schema(_))));
        let bad = BASKET.replace("[[1.0, 0.28], [0.28, 1.0]]", "[[1.0, 0.28]]");
        assert!(InstrumentFile::from_json(&bad).unwrap().to_priceable().is_err());
    }

    #[test]
    fn json_round_trip() {
        let file = InstrumentFile::from_json(BASKET).unwrap();
        let again = InstrumentFile::from_json(&file.to_json().unwrap()).unwrap();
        assert_eq!(file, again);
    }
}
