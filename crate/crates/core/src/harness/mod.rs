//! Replays reference tables, computes error statistics and skewness, and
//! runs the identity suite against Monte Carlo.

mod stats;
mod tables;

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::Result;
use crate::expansion::{identity_form, Identity};
use crate::market_model::schema::Priceable;
use crate::market_model::{BasketSpreadInstrument, CovarianceMatrix, Direction, ReducedBasket};
use crate::mc_oracle::{mc_asian_ladder, mc_identities, mc_price_ladder, Ladder, McConfig, McResult};
use crate::proxy::{build_expansion_inputs, ExpansionInputs, ProxyKind};
use crate::{price_reduced, OrderedPrice};

pub use stats::{basket_skewness, error_stats, ErrorStats};
pub use tables::{Column, Footer, LadderKind, TableSpec};

/// Minimum MC tolerance on table prices, absorbing the proxy's own error.
pub const MC_PRICE_FLOOR: f64 = 5e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Oracle {
    /// The table's printed reference column.
    Paper,
    /// A fresh simulation of the unreduced payoff.
    InternalMc(McConfig),
}

impl Oracle {
    fn name(&self) -> &'static str {
        match self {
            Oracle::Paper => "paper",
            Oracle::InternalMc(_) => "mc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowReport {
    pub strike: f64,
    pub vg: [f64; 4],
    pub oracle: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    /// `|vg3 - oracle|`.
    pub abs_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderStats {
    pub order: usize,
    pub rmse: f64,
    pub mae: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: String) -> Self {
        Self { name: name.into(), passed, detail }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableReport {
    pub id: String,
    pub oracle: &'static str,
    pub skewness: Option<f64>,
    pub rows: Vec<RowReport>,
    pub stats: Vec<OrderStats>,
    pub checks: Vec<Check>,
    pub passed: bool,
    #[serde(skip)]
    pub decimals: u32,
}

impl TableReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Rounded to the table's printed precision.
    pub fn to_csv(&self) -> String {
        let d = self.decimals as usize;
        let mut out = String::from("strike,vg0,vg1,vg2,vg3,oracle,std_error,abs_err\n");
        for r in &self.rows {
            let se = r.std_error.map(|s| format!("{s:.d$}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{:.d$},{:.d$},{:.d$},{:.d$},{:.d$},{se},{:.d$}",
                r.strike, r.vg[0], r.vg[1], r.vg[2], r.vg[3], r.oracle, r.abs_err
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Prices every rung of the table at orders 0 to 3.
pub fn price_table(spec: &TableSpec) -> Result<Vec<OrderedPrice>> {
    spec.strikes
        .iter()
        .map(|&k| {
            let basket = spec.instrument_at(k).to_priceable()?.reduced()?;
            price_reduced(&basket, spec.proxy, 3)
        })
        .collect()
}

fn oracle_values(spec: &TableSpec, oracle: &Oracle) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    match oracle {
        Oracle::Paper => Ok((spec.reference().to_vec(), None)),
        Oracle::InternalMc(config) => {
            let ladder = match spec.ladder {
                LadderKind::Strike => Ladder::Strike(spec.strikes.clone()),
                LadderKind::MultStrike => Ladder::MultStrike(spec.strikes.clone()),
            };
            let results: Vec<McResult> = match spec.instrument.to_priceable()? {
                Priceable::Basket { instrument, model } => {
                    mc_price_ladder(&ReducedBasket::new(&instrument, &model)?, &ladder, config)?
                }
                Priceable::Asian { spec: asian, model } => mc_asian_ladder(&asian, &model, &ladder, config)?,
            };
            Ok((results.iter().map(|r| r.price).collect(), Some(results.iter().map(|r| r.std_error).collect())))
        }
    }
}

/// Prices the table and checks it against `oracle`.
///
/// Against the printed reference: every order within the table tolerance of
/// its printed column, the printed footers recomputed from our prices within
/// one unit in the last place, and the error decreasing with the order
/// (half a unit of slack). Against Monte Carlo: `|vg3 - mc| <= max(3 SE, 5e-3)`
/// on every row and the same order check with three standard errors of slack.
pub fn run_table(spec: &TableSpec, oracle: &Oracle) -> Result<TableReport> {
    let prices = price_table(spec)?;
    let (reference, std_errors) = oracle_values(spec, oracle)?;
    let n = spec.strikes.len();
    let order_values: Vec<Vec<f64>> = (0..4).map(|k| prices.iter().map(|p| p.vg[k]).collect()).collect();

    let rows: Vec<RowReport> = (0..n)
        .map(|r| {
            let vg = [order_values[0][r], order_values[1][r], order_values[2][r], order_values[3][r]];
            RowReport {
                strike: spec.strikes[r],
                vg,
                oracle: reference[r],
                std_error: std_errors.as_ref().map(|s| s[r]),
                abs_err: (vg[3] - reference[r]).abs(),
            }
        })
        .collect();
    let stats: Vec<OrderStats> = (0..4)
        .map(|k| {
            let s = error_stats(&order_values[k], &reference);
            OrderStats { order: k, rmse: s.rmse, mae: s.mae }
        })
        .collect();

    let mut checks = Vec::new();
    let unit = spec.unit();
    match oracle {
        Oracle::Paper => {
            for (k, ours) in order_values.iter().enumerate() {
                let Some(printed) = spec.order_column(k) else { continue };
                let worst = ours.iter().zip(printed).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                checks.push(Check::new(
                    format!("vg{k}_matches_printed"),
                    worst <= spec.tolerance,
                    format!("max |vg{k} - printed| = {worst:.2e} (tolerance {:.0e})", spec.tolerance),
                ));
            }
            for (k, s) in stats.iter().enumerate() {
                let Some(footer) = spec.footer_for(&format!("VG{k}")) else { continue };
                let (dr, dm) = ((s.rmse - footer.rmse).abs(), (s.mae - footer.mae).abs());
                checks.push(Check::new(
                    format!("vg{k}_footer"),
                    dr <= unit * (1.0 + 1e-9) && dm <= unit * (1.0 + 1e-9),
                    format!(
                        "rmse {:.prec$} vs {:.prec$}, mae {:.prec$} vs {:.prec$}",
                        s.rmse,
                        footer.rmse,
                        s.mae,
                        footer.mae,
                        prec = spec.decimals as usize + 1
                    ),
                ));
            }
            checks.push(order_check(&stats, 0.5 * unit));
        }
        Oracle::InternalMc(_) => {
            let se = std_errors.as_ref().expect("mc oracle has standard errors");
            let worst = rows
                .iter()
                .zip(se)
                .map(|(r, s)| r.abs_err / (3.0 * s).max(MC_PRICE_FLOOR))
                .fold(0.0, f64::max);
            checks.push(Check::new(
                "vg3_within_mc",
                worst <= 1.0,
                format!("max |vg3 - mc| / max(3 SE, {MC_PRICE_FLOOR:.0e}) = {worst:.3}"),
            ));
            let slack = 3.0 * se.iter().copied().fold(0.0, f64::max);
            checks.push(order_check(&stats, slack));
        }
    }

    let skewness = spec.instrument.to_priceable()?.reduced().ok().and_then(|b| basket_skewness(&b).ok());
    let passed = checks.iter().all(|c| c.passed);
    Ok(TableReport {
        id: spec.id.clone(),
        oracle: oracle.name(),
        skewness,
        rows,
        stats,
        checks,
        passed,
        decimals: spec.decimals,
    })
}

/// `RMSE(vg3) <= RMSE(vg2) <= min(RMSE(vg1), RMSE(vg0))`, up to `slack`.
fn order_check(stats: &[OrderStats], slack: f64) -> Check {
    let r: Vec<f64> = stats.iter().map(|s| s.rmse).collect();
    let passed = r[3] <= r[2] + slack && r[2] <= r[0].min(r[1]) + slack;
    Check::new(
        "order_improvement",
        passed,
        format!("rmse by order {:.2e} {:.2e} {:.2e} {:.2e} (slack {slack:.1e})", r[0], r[1], r[2], r[3]),
    )
}

/// Recomputes each printed footer from the printed columns themselves.
pub fn printed_footer_consistency(spec: &TableSpec) -> Vec<Check> {
    let reference = spec.reference();
    let unit = spec.unit();
    spec.footer
        .iter()
        .filter_map(|f| {
            let values = spec.column(&f.column)?;
            let s = error_stats(values, reference);
            let ok = (s.rmse - f.rmse).abs() <= unit * (1.0 + 1e-9) && (s.mae - f.mae).abs() <= unit * (1.0 + 1e-9);
            Some(Check::new(
                format!("{}_printed_footer", f.column),
                ok,
                format!("rmse {:.6} vs {}, mae {:.6} vs {}", s.rmse, f.rmse, s.mae, f.mae),
            ))
        })
        .collect()
}

/// A random three-asset spread with both legs populated and `kappa*` near 1.
pub fn random_identity_instance(seed: u64) -> Result<ExpansionInputs> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 3;
    let loadings = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let raw = &loadings * loadings.transpose();
    let vols: Vec<f64> = (0..n).map(|_| rng.gen_range(0.15..0.5)).collect();
    let maturity = rng.gen_range(0.5..2.0);
    let cov = DMatrix::from_fn(n, n, |i, j| {
        raw[(i, j)] / (raw[(i, i)] * raw[(j, j)]).sqrt() * vols[i] * vols[j] * maturity
    });
    let cov = CovarianceMatrix::from_matrix(cov, maturity)?;
    let forwards: Vec<f64> = (0..n).map(|_| rng.gen_range(50.0..150.0)).collect();
    let negatives = if rng.gen_bool(0.5) { 1 } else { 2 };
    let mut weights: Vec<f64> =
        (0..n).map(|i| rng.gen_range(0.5..1.5) * if i < negatives { -1.0 } else { 1.0 }).collect();
    let a_p: f64 = (0..n).filter(|&i| weights[i] > 0.0).map(|i| weights[i] * forwards[i]).sum();
    let a_n: f64 = (0..n).filter(|&i| weights[i] < 0.0).map(|i| -weights[i] * forwards[i]).sum();
    let target = rng.gen_range(0.85..1.15);
    for w in weights.iter_mut().filter(|w| **w < 0.0) {
        *w *= target * a_p / a_n;
    }
    let direction = if rng.gen_bool(0.5) { Direction::Call } else { Direction::Put };
    let discount = (-0.03 * maturity).exp();
    let instrument = BasketSpreadInstrument::new(weights, 0.0, maturity, direction)?;
    let basket = ReducedBasket::from_parts(instrument, forwards, cov, discount)?;
    build_expansion_inputs(&basket, ProxyKind::Geometric)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityRow {
    pub number: usize,
    pub integrand: &'static str,
    pub indices: Vec<usize>,
    pub closed_form: f64,
    pub mc: f64,
    pub std_error: f64,
    /// `(closed_form - mc) / SE`.
    pub z: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityInstanceReport {
    pub seed: u64,
    pub kappa_star: f64,
    pub nu2: f64,
    pub rows: Vec<IdentityRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentitySuiteReport {
    pub paths: u64,
    pub mc_seed: u64,
    pub instances: Vec<IdentityInstanceReport>,
    pub passed: usize,
    pub total: usize,
}

impl IdentitySuiteReport {
    pub fn all_passed(&self) -> bool {
        self.passed == self.total
    }
}

/// Compares every identity's closed form with a simulation of its left-hand
/// side on each random instance; a row passes within `3 SE`.
pub fn run_identity_suite(instance_seeds: &[u64], config: &McConfig) -> Result<IdentitySuiteReport> {
    let indices = [0, 1, 2];
    let mut instances = Vec::new();
    for &seed in instance_seeds {
        let inputs = random_identity_instance(seed)?;
        let mc = mc_identities(&inputs, indices, config)?;
        let rows = mc
            .into_iter()
            .map(|(id, r): (Identity, McResult)| {
                let closed = identity_form(&inputs, id, &indices).value(&inputs);
                let z = if r.std_error > 0.0 { (closed - r.price) / r.std_error } else { 0.0 };
                IdentityRow {
                    number: id.number(),
                    integrand: id.integrand(),
                    indices: indices[..id.arity()].to_vec(),
                    closed_form: closed,
                    mc: r.price,
                    std_error: r.std_error,
                    z,
                    passed: r.within(closed, 3.0),
                }
            })
            .collect();
        instances.push(IdentityInstanceReport { seed, kappa_star: inputs.kappa_star, nu2: inputs.nu2, rows });
    }
    let total = instances.iter().map(|i| i.rows.len()).sum();
    let passed = instances.iter().flat_map(|i| &i.rows).filter(|r| r.passed).count();
    Ok(IdentitySuiteReport { paths: config.paths, mc_seed: config.seed, instances, passed, total })
}

/// Looks up a bundled table and runs it.
pub fn run_case(id: &str, oracle: &Oracle) -> Result<TableReport> {
    run_table(&TableSpec::bundled(id)?, oracle)
}
