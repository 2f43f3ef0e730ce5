//! Direct simulation of Asian basket payoffs along observation dates,
//! independent of the pseudo-asset reduction.

use nalgebra::DMatrix;

use super::{pivoted_cholesky, simulate, spread_payoffs, Ladder, McConfig, McResult};
use crate::error::{Error, Result};
use crate::market_model::{AsianBasketSpec, MarketModel};

/// Prices `spec` by simulating each asset's forward at every future observation.
pub fn mc_asian_basket(spec: &AsianBasketSpec, model: &MarketModel, config: &McConfig) -> Result<McResult> {
    Ok(mc_asian_ladder(spec, model, &Ladder::Strike(vec![spec.strike]), config)?.remove(0))
}

/// Every rung of `ladder` on shared paths.
pub fn mc_asian_ladder(
    spec: &AsianBasketSpec,
    model: &MarketModel,
    ladder: &Ladder,
    config: &McConfig,
) -> Result<Vec<McResult>> {
    config.validate()?;
    let m = model.len();
    spec.validate(m)?;
    let pairs = ladder.pairs(spec.strike, spec.mult_strike);
    let eta = spec.direction.eta();
    let discount = model.discount_factor();
    let assets = model.assets();
    let rho = model.correlation();

    // deterministic part: fixings and observations at t <= 0
    let mut fixed_pos = 0.0;
    let mut fixed_neg = 0.0;
    let add = |c: f64, pos: &mut f64, neg: &mut f64| {
        if c > 0.0 {
            *pos += c;
        } else {
            *neg -= c;
        }
    };
    struct Step {
        /// `(asset, coefficient w^A w^B F_a(0, t))`
        terms: Vec<(usize, f64)>,
        factor: DMatrix<f64>,
        half_var: Vec<f64>,
    }
    let mut steps: Vec<Step> = Vec::new();
    let mut previous = 0.0;
    for (j, (&t, &wa)) in spec.obs_times.iter().zip(&spec.asian_weights).enumerate() {
        if let Some(values) = spec.fixing(j) {
            if t > 1e-12 {
                return Err(Error::Fixing(format!("fixing supplied for future observation at t = {t}")));
            }
            if values.len() != m {
                return Err(Error::Fixing(format!("observation {j}: {} fixing values for {m} assets", values.len())));
            }
            for (a, &x) in values.iter().enumerate() {
                add(wa * spec.basket_weights[a] * x, &mut fixed_pos, &mut fixed_neg);
            }
            continue;
        }
        if t <= 0.0 {
            if t < -1e-12 {
                return Err(Error::Fixing(format!("missing fixing for past observation at t = {t}")));
            }
            for (a, asset) in assets.iter().enumerate() {
                add(wa * spec.basket_weights[a] * asset.forward_at(t, spec.maturity), &mut fixed_pos, &mut fixed_neg);
            }
            continue;
        }
        let increment = DMatrix::from_fn(m, m, |a, b| {
            let cross = |s: f64| assets[a].vol.cross_integral(&assets[b].vol, s);
            let r = if a == b { 1.0 } else { rho[(a, b)] };
            r * (cross(t) - cross(previous))
        });
        previous = t;
        let factor = pivoted_cholesky(&increment)?;
        let half_var = (0..m).map(|a| 0.5 * increment[(a, a)]).collect();
        let terms = (0..m)
            .map(|a| (a, wa * spec.basket_weights[a] * assets[a].forward_at(t, spec.maturity)))
            .filter(|&(_, c)| c != 0.0)
            .collect();
        steps.push(Step { terms, factor, half_var });
    }

    let mut mean_pos = fixed_pos;
    let mut mean_neg = fixed_neg;
    for step in &steps {
        for &(_, c) in &step.terms {
            add(c, &mut mean_pos, &mut mean_neg);
        }
    }
    let means = (mean_pos, mean_neg);
    let n_normals: usize = steps.iter().map(|s| s.factor.ncols()).sum();
    if n_normals == 0 {
        let mut out = vec![0.0; pairs.len()];
        let mut ctl = vec![0.0; pairs.len()];
        spread_payoffs(means, means, &pairs, eta, discount, &mut out, &mut ctl);
        return Ok(out.into_iter().map(|p| McResult::exact(p, config)).collect());
    }

    Ok(simulate(config, n_normals, m, pairs.len(), |z, x, out, ctl| {
        x.iter_mut().for_each(|v| *v = 0.0);
        let mut pos = fixed_pos;
        let mut neg = fixed_neg;
        let mut offset = 0;
        for step in &steps {
            let r = step.factor.ncols();
            for (a, xa) in x.iter_mut().enumerate().take(m) {
                let mut acc = -step.half_var[a];
                for k in 0..r {
                    acc += step.factor[(a, k)] * z[offset + k];
                }
                *xa += acc;
            }
            offset += r;
            for &(a, c) in &step.terms {
                let value = c * x[a].exp();
                if c > 0.0 {
                    pos += value;
                } else {
                    neg -= value;
                }
            }
        }
        spread_payoffs((pos, neg), means, &pairs, eta, discount, out, ctl);
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_model::{Asset, Direction, ReducedBasket, VolCurve};

    fn model() -> MarketModel {
        MarketModel::new(
            vec![
                Asset::new(100.0, VolCurve::flat(0.3).unwrap()).with_carry(0.03),
                Asset::new(60.0, VolCurve::new(&[(0.5, 0.2), (1.0, 0.4)]).unwrap()),
            ],
            DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]),
            0.95,
        )
        .unwrap()
    }

    fn spec() -> AsianBasketSpec {
        AsianBasketSpec {
            obs_times: vec![0.25, 0.5, 0.75, 1.0],
            asian_weights: vec![0.25; 4],
            basket_weights: vec![1.0, -1.0],
            fixings: Vec::new(),
            strike: 30.0,
            mult_strike: 1.0,
            maturity: 1.0,
            direction: Direction::Call,
        }
    }

    #[test]
    fn agrees_with_reduced_basket_simulation() {
        let config = McConfig { paths: 400_000, seed: 3, batches: 200, ..McConfig::default() };
        let direct = mc_asian_basket(&spec(), &model(), &config).unwrap();
        let (instr, reduced) = crate::market_model::reduce_asian_basket(&spec(), &model()).unwrap();
        let basket = ReducedBasket::new(&instr, &reduced).unwrap();
        let via = super::super::mc_price(&basket, &config.with_seed(4)).unwrap();
        let se = (direct.std_error.powi(2) + via.std_error.powi(2)).sqrt();
        assert!((direct.price - via.price).abs() < 4.0 * se, "{direct:?} vs {via:?}");
    }

    #[test]
    fn fully_fixed_is_deterministic() {
        let mut s = spec();
        s.obs_times = vec![-0.5, -0.25];
        s.asian_weights = vec![0.5, 0.5];
        s.fixings = vec![Some(vec![100.0, 50.0]), Some(vec![110.0, 50.0])];
        s.strike = 40.0;
        let r = mc_asian_basket(&s, &model(), &McConfig { paths: 100, batches: 10, ..McConfig::default() }).unwrap();
        assert_eq!(r.std_error, 0.0);
        assert!((r.price - 0.95 * 15.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_future_fixing() {
        let mut s = spec();
        s.fixings = vec![Some(vec![1.0, 1.0]), None, None, None];
        let config = McConfig { paths: 100, batches: 10, ..McConfig::default() };
        assert!(matches!(mc_asian_basket(&s, &model(), &config), Err(Error::Fixing(_))));
    }
}
