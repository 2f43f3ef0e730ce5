//! Bundled reference tables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_model::schema::InstrumentFile;
use crate::proxy::ProxyKind;

const BUNDLED: [(&str, &str); 7] = [
    ("deelstra1", include_str!("../../data/tables/deelstra1.json")),
    ("deelstra2", include_str!("../../data/tables/deelstra2.json")),
    ("deelstra4", include_str!("../../data/tables/deelstra4.json")),
    ("deelstra7", include_str!("../../data/tables/deelstra7.json")),
    ("deelstra8", include_str!("../../data/tables/deelstra8.json")),
    ("deelstra10", include_str!("../../data/tables/deelstra10.json")),
    ("krekel2", include_str!("../../data/tables/krekel2.json")),
];

/// Which strike the table varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LadderKind {
    Strike,
    MultStrike,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Footer {
    pub column: String,
    pub rmse: f64,
    pub mae: f64,
}

/// A printed price table: one instrument, a strike ladder and the columns
/// of every method, with RMSE/MAE footers against `reference_column`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    pub id: String,
    pub title: String,
    pub family: String,
    /// The `strike` (or `mult_strike`) field is overwritten per row.
    pub instrument: InstrumentFile,
    pub ladder: LadderKind,
    pub strikes: Vec<f64>,
    pub decimals: u32,
    pub tolerance: f64,
    #[serde(default)]
    pub proxy: ProxyKind,
    pub columns: Vec<Column>,
    pub reference_column: String,
    #[serde(default)]
    pub footer: Vec<Footer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl TableSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: TableSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn bundled_ids() -> impl Iterator<Item = &'static str> {
        BUNDLED.iter().map(|(id, _)| *id)
    }

    pub fn bundled(id: &str) -> Result<Self> {
        let (_, text) = BUNDLED
            .iter()
            .find(|(name, _)| *name == id)
            .ok_or_else(|| Error::UnknownCase(id.to_string()))?;
        Self::from_json(text)
    }

    pub fn all_bundled() -> Result<Vec<Self>> {
        Self::bundled_ids().map(Self::bundled).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.strikes.is_empty() {
            return Err(Error::Schema(format!("table {}: empty strike list", self.id)));
        }
        for c in &self.columns {
            if c.values.len() != self.strikes.len() {
                return Err(Error::Schema(format!(
                    "table {}: column {} has {} values for {} strikes",
                    self.id,
                    c.name,
                    c.values.len(),
                    self.strikes.len()
                )));
            }
            if c.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Schema(format!("table {}: column {} has a non-finite value", self.id, c.name)));
            }
        }
        if self.column(&self.reference_column).is_none() {
            return Err(Error::Schema(format!("table {}: missing reference column {}", self.id, self.reference_column)));
        }
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|c| c.name == name).map(|c| c.values.as_slice())
    }

    pub fn reference(&self) -> &[f64] {
        self.column(&self.reference_column).expect("validated")
    }

    /// Printed order-`k` column, named `VG0` .. `VG3`.
    pub fn order_column(&self, k: usize) -> Option<&[f64]> {
        self.column(&format!("VG{k}"))
    }

    pub fn footer_for(&self, column: &str) -> Option<&Footer> {
        self.footer.iter().find(|f| f.column == column)
    }

    /// The instrument with its ladder strike set to `strike`.
    pub fn instrument_at(&self, strike: f64) -> InstrumentFile {
        let mut file = self.instrument.clone();
        match self.ladder {
            LadderKind::Strike => file.strike = strike,
            LadderKind::MultStrike => file.mult_strike = strike,
        }
        file
    }

    /// One unit in the last printed place.
    pub fn unit(&self) -> f64 {
        10f64.powi(-(self.decimals as i32))
    }
}
