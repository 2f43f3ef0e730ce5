//! Closed forms of the measure-change expectations behind every expansion term.
//!
//! With `S*_i = S_i(T)/F_i`, the unit-mean proxies `G_p*`, `G_n*`, the ratio
//! `R = G_p*/G_n*` and `h(x) = (eta x)^+`, each identity states
//! `E[B Y h(R - kappa*)] = exp(s) Black(exp(f), kappa*, nu^2)` for some
//! integrand `Y`. [`IdentityForm`] stores `(s, f)`.

use serde::Serialize;

use crate::black76::{black, BlackParams};
use crate::proxy::ExpansionInputs;

/// The ten integrands, in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Identity {
    /// `G_n*`
    NegativeLeg,
    /// `G_p*`
    PositiveLeg,
    /// `S*_i`
    Asset,
    /// `G_p* R`
    PositiveLegRatio,
    /// `S*_i R`
    AssetRatio,
    /// `S*_i S*_j / G_n*`
    PairOverNegative,
    /// `G_p* R^2`
    PositiveLegRatioSquared,
    /// `S*_i R^2`
    AssetRatioSquared,
    /// `S*_i S*_j G_p* / G_n*^2`
    PairPositiveOverNegativeSquared,
    /// `S*_i S*_j S*_k / G_n*^2`
    TripleOverNegativeSquared,
}

impl Identity {
    pub const ALL: [Identity; 10] = [
        Identity::NegativeLeg,
        Identity::PositiveLeg,
        Identity::Asset,
        Identity::PositiveLegRatio,
        Identity::AssetRatio,
        Identity::PairOverNegative,
        Identity::PositiveLegRatioSquared,
        Identity::AssetRatioSquared,
        Identity::PairPositiveOverNegativeSquared,
        Identity::TripleOverNegativeSquared,
    ];

    /// 1-based position in [`Identity::ALL`].
    pub fn number(self) -> usize {
        Self::ALL.iter().position(|&x| x == self).unwrap() + 1
    }

    pub fn from_number(n: usize) -> Option<Self> {
        n.checked_sub(1).and_then(|i| Self::ALL.get(i).copied())
    }

    /// Number of asset indices the integrand takes.
    pub fn arity(self) -> usize {
        match self {
            Identity::NegativeLeg
            | Identity::PositiveLeg
            | Identity::PositiveLegRatio
            | Identity::PositiveLegRatioSquared => 0,
            Identity::Asset | Identity::AssetRatio | Identity::AssetRatioSquared => 1,
            Identity::PairOverNegative | Identity::PairPositiveOverNegativeSquared => 2,
            Identity::TripleOverNegativeSquared => 3,
        }
    }

    pub fn integrand(self) -> &'static str {
        match self {
            Identity::NegativeLeg => "Gn",
            Identity::PositiveLeg => "Gp",
            Identity::Asset => "S_i",
            Identity::PositiveLegRatio => "Gp R",
            Identity::AssetRatio => "S_i R",
            Identity::PairOverNegative => "S_i S_j / Gn",
            Identity::PositiveLegRatioSquared => "Gp R^2",
            Identity::AssetRatioSquared => "S_i R^2",
            Identity::PairPositiveOverNegativeSquared => "S_i S_j Gp / Gn^2",
            Identity::TripleOverNegativeSquared => "S_i S_j S_k / Gn^2",
        }
    }
}

/// `exp(log_scale) Black(exp(log_forward), kappa*, nu^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityForm {
    pub log_scale: f64,
    pub log_forward: f64,
}

impl IdentityForm {
    pub fn value(&self, inputs: &ExpansionInputs) -> f64 {
        let params = BlackParams {
            forward: self.log_forward.exp(),
            strike: inputs.kappa_star,
            variance: inputs.nu2.max(0.0),
            discount: inputs.discount,
            direction: inputs.direction,
        };
        self.log_scale.exp() * black(&params)
    }
}

/// Closed form of `identity` at asset indices `idx` (only the first `arity` are read).
///
/// # Panics
/// If `idx` is shorter than the identity's arity or an index is out of range.
pub fn identity_form(inputs: &ExpansionInputs, identity: Identity, idx: &[usize]) -> IdentityForm {
    let nu2 = inputs.nu2;
    let nun = inputs.nu2_n;
    let nunp = inputs.nu2_np;
    let ln_er = inputs.ln_mean_ratio();
    let vb = |i: usize| inputs.vbar[idx[i]];
    let vm = |i: usize| inputs.vbar_neg[idx[i]];
    let v = |i: usize, j: usize| inputs.cov[(idx[i], idx[j])];
    let (log_scale, log_forward) = match identity {
        Identity::NegativeLeg => (0.0, 0.0),
        Identity::PositiveLeg => (0.0, nu2),
        Identity::Asset => (0.0, ln_er + vb(0)),
        Identity::PositiveLegRatio => (nu2, 2.0 * nu2),
        Identity::AssetRatio => (ln_er + vb(0), nu2 + ln_er + vb(0)),
        Identity::PairOverNegative => {
            (nun + v(0, 1) + vm(0) + vm(1), vb(0) + vb(1) - 2.0 * nunp + 2.0 * nun)
        }
        Identity::PositiveLegRatioSquared => (3.0 * nu2, 3.0 * nu2),
        Identity::AssetRatioSquared => (nu2 + 2.0 * ln_er + 2.0 * vb(0), 2.0 * nu2 + ln_er + vb(0)),
        Identity::PairPositiveOverNegativeSquared => (
            3.0 * nun - 2.0 * nunp + vb(0) + vb(1) + v(0, 1) + vm(0) + vm(1),
            vb(0) + vb(1) + nu2 - 2.0 * nunp + 2.0 * nun,
        ),
        Identity::TripleOverNegativeSquared => (
            v(0, 1) + v(0, 2) + v(1, 2) + 2.0 * (vm(0) + vm(1) + vm(2)) + 3.0 * nun,
            vb(0) + vb(1) + vb(2) - 3.0 * nunp + 3.0 * nun,
        ),
    };
    IdentityForm { log_scale, log_forward }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityValue {
    pub identity: Identity,
    pub number: usize,
    pub indices: Vec<usize>,
    pub value: f64,
}

/// Right-hand sides of all ten identities. Index-dependent identities use the
/// leading entries of `indices` (`i`, then `j`, then `k`).
///
/// # Panics
/// If fewer than three indices are given or one is out of range.
pub fn identity_values(inputs: &ExpansionInputs, indices: [usize; 3]) -> Vec<IdentityValue> {
    assert!(indices.iter().all(|&i| i < inputs.len()), "asset index out of range");
    Identity::ALL
        .iter()
        .map(|&identity| {
            let used = indices[..identity.arity()].to_vec();
            IdentityValue {
                identity,
                number: identity.number(),
                value: identity_form(inputs, identity, &indices).value(inputs),
                indices: used,
            }
        })
        .collect()
}
