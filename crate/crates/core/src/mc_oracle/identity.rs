//! Monte Carlo estimates of the identity left-hand sides `E[B Y h(R - kappa*)]`.

use super::{pivoted_cholesky, simulate, McConfig, McResult};
use crate::error::Result;
use crate::expansion::Identity;
use crate::proxy::ExpansionInputs;

/// All ten left-hand sides on shared paths; index-dependent integrands use
/// `indices` in order.
pub fn mc_identities(
    inputs: &ExpansionInputs,
    indices: [usize; 3],
    config: &McConfig,
) -> Result<Vec<(Identity, McResult)>> {
    config.validate()?;
    let m = inputs.len();
    assert!(indices.iter().all(|&i| i < m), "asset index out of range");
    let factor = pivoted_cholesky(&inputs.cov)?;
    let rank = factor.ncols();
    let drift: Vec<f64> = (0..m).map(|i| -0.5 * inputs.cov[(i, i)]).collect();
    let a = &inputs.exponents;
    let negative = &inputs.negative;
    let (alpha, beta) = (inputs.alpha, inputs.beta);
    let (kappa, eta, discount) = (inputs.kappa_star, inputs.eta(), inputs.discount);
    let [i, j, k] = indices;

    let results = simulate(config, rank, m, Identity::ALL.len(), |z, x, out, ctl| {
        ctl.iter_mut().for_each(|c| *c = 0.0);
        let mut ln_gp = 0.0;
        let mut ln_gn = 0.0;
        for l in 0..m {
            let mut acc = drift[l];
            for c in 0..rank {
                acc += factor[(l, c)] * z[c];
            }
            x[l] = acc;
            if negative[l] {
                ln_gn -= a[l] * acc;
            } else {
                ln_gp += a[l] * acc;
            }
        }
        let gp = alpha * ln_gp.exp();
        let gn = beta * ln_gn.exp();
        let ratio = gp / gn;
        let h = discount * (eta * (ratio - kappa)).max(0.0);
        let (si, sj, sk) = (x[i].exp(), x[j].exp(), x[k].exp());
        for (o, id) in out.iter_mut().zip(Identity::ALL) {
            let y = match id {
                Identity::NegativeLeg => gn,
                Identity::PositiveLeg => gp,
                Identity::Asset => si,
                Identity::PositiveLegRatio => gp * ratio,
                Identity::AssetRatio => si * ratio,
                Identity::PairOverNegative => si * sj / gn,
                Identity::PositiveLegRatioSquared => gp * ratio * ratio,
                Identity::AssetRatioSquared => si * ratio * ratio,
                Identity::PairPositiveOverNegativeSquared => si * sj * gp / (gn * gn),
                Identity::TripleOverNegativeSquared => si * sj * sk / (gn * gn),
            };
            *o = y * h;
        }
    });
    Ok(Identity::ALL.into_iter().zip(results).collect())
}

/// Left-hand side of a single identity.
pub fn mc_identity_lhs(
    identity: Identity,
    inputs: &ExpansionInputs,
    indices: [usize; 3],
    config: &McConfig,
) -> Result<McResult> {
    let all = mc_identities(inputs, indices, config)?;
    Ok(all.into_iter().find(|(id, _)| *id == identity).map(|(_, r)| r).expect("every identity is simulated"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::identity_form;
    use crate::market_model::{BasketSpreadInstrument, CovarianceMatrix, Direction, ReducedBasket};
    use crate::proxy::{build_expansion_inputs, ProxyKind};
    use nalgebra::DMatrix;

    #[test]
    fn small_run_agrees_with_closed_forms() {
        let cov = DMatrix::from_row_slice(3, 3, &[0.09, 0.03, 0.01, 0.03, 0.04, 0.0, 0.01, 0.0, 0.0625]);
        let cov = CovarianceMatrix::from_matrix(cov, 1.0).unwrap();
        let instr = BasketSpreadInstrument::new(vec![-1.0, 0.5, 0.5], 0.0, 1.0, Direction::Call).unwrap();
        let basket = ReducedBasket::from_parts(instr, vec![90.0, 100.0, 80.0], cov, 0.95).unwrap();
        let e = build_expansion_inputs(&basket, ProxyKind::Geometric).unwrap();
        let config = McConfig { paths: 200_000, seed: 11, batches: 100, ..McConfig::default() };
        let idx = [0, 1, 2];
        for (id, r) in mc_identities(&e, idx, &config).unwrap() {
            let closed = identity_form(&e, id, &idx).value(&e);
            assert!(r.within(closed, 4.5), "{id:?}: {r:?} vs {closed}");
        }
    }

    #[test]
    fn proxies_have_unit_mean() {
        let cov = DMatrix::from_row_slice(3, 3, &[0.09, 0.03, 0.01, 0.03, 0.04, 0.0, 0.01, 0.0, 0.0625]);
        let cov = CovarianceMatrix::from_matrix(cov, 1.0).unwrap();
        let instr = BasketSpreadInstrument::new(vec![-1.0, 0.5, 0.5], 0.0, 1.0, Direction::Call).unwrap();
        let basket = ReducedBasket::from_parts(instr, vec![90.0, 100.0, 80.0], cov, 1.0).unwrap();
        let mut e = build_expansion_inputs(&basket, ProxyKind::Levy).unwrap();
        // with kappa* -> 0 the call payoff is B R, so the Gn and Gp identities estimate E[Gp*]
        e.kappa_star = 1e-300;
        let config = McConfig { paths: 200_000, seed: 5, batches: 100, ..McConfig::default() };
        let all = mc_identities(&e, [0, 1, 2], &config).unwrap();
        let gn_r = all[0].1;
        assert!(gn_r.within(1.0, 3.0), "{gn_r:?}");
    }
}
