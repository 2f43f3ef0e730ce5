//! Stochastic Taylor expansion of the spread payoff around the lognormal proxy.
//!
//! After normalizing by `A_p`, the payoff is `h(X - kappa* Y)` with `X`, `Y`
//! the unit-mean arithmetic legs. Expanding it around the proxy payoff
//! `G_n* h(R - kappa*)` in powers of the leg differences gives, at each order,
//! expectations of products of assets and proxies against strike
//! derivatives of `h`. Every one of them has a closed form
//! (see [`identities`]), so order `k` adds a finite list of Black-76 strike
//! derivatives weighted by normalized weights.

pub mod identities;
pub mod sums;

use serde::Serialize;

use crate::black76::StrikeKernel;
use crate::numeric::CompensatedSum;
use crate::proxy::{price_vg0, ExpansionInputs};

pub use identities::{identity_form, identity_values, Identity, IdentityForm, IdentityValue};
pub use sums::{full_pair_sum, full_triple_sum, sym_pair_sum, sym_triple_sum};

pub const MAX_ORDER: usize = 3;

/// One summand of a correction, already multiplied by `A_p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermContribution {
    pub order: usize,
    pub label: &'static str,
    pub value: f64,
}

/// Prices at orders `0..=max_order` and the terms each order added.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderedPrice {
    /// `vg[k]` is the order-`k` price.
    pub vg: Vec<f64>,
    pub breakdown: Vec<TermContribution>,
}

impl OrderedPrice {
    /// The same value at every order, with no correction terms.
    pub fn exact(value: f64, max_order: usize) -> Self {
        Self { vg: vec![value; max_order.min(MAX_ORDER) + 1], breakdown: Vec::new() }
    }

    pub fn max_order(&self) -> usize {
        self.vg.len() - 1
    }

    /// Highest-order price.
    pub fn last(&self) -> f64 {
        *self.vg.last().expect("at least order 0")
    }

    pub fn terms(&self, order: usize) -> impl Iterator<Item = &TermContribution> {
        self.breakdown.iter().filter(move |t| t.order == order)
    }
}

/// Evaluates orders `0..=max_order` (capped at 3).
pub fn price_orders(inputs: &ExpansionInputs, max_order: usize) -> OrderedPrice {
    let max_order = max_order.min(MAX_ORDER);
    if inputs.is_deterministic_ratio() {
        return OrderedPrice::exact(inputs.intrinsic(), max_order);
    }
    let ctx = Context::new(inputs);
    let mut out = OrderedPrice { vg: vec![price_vg0(inputs)], breakdown: Vec::new() };
    for order in 1..=max_order {
        let terms = match order {
            1 => ctx.first_order(),
            2 => ctx.second_order(),
            _ => ctx.third_order(),
        };
        let increment: CompensatedSum = terms.iter().map(|&(_, v)| v).collect();
        let previous = *out.vg.last().unwrap();
        out.vg.push(previous + increment.value());
        out.breakdown.extend(terms.into_iter().map(|(label, value)| TermContribution { order, label, value }));
    }
    out
}

pub fn price_vg1(inputs: &ExpansionInputs) -> f64 {
    price_orders(inputs, 1).vg[1]
}

pub fn price_vg2(inputs: &ExpansionInputs) -> f64 {
    price_orders(inputs, 2).vg[2]
}

pub fn price_vg3(inputs: &ExpansionInputs) -> f64 {
    price_orders(inputs, 3).vg[3]
}

/// Compares the symmetry-reduced sums of the second- and third-order
/// corrections with their naive evaluation.
pub fn sum_symmetry_check(inputs: &ExpansionInputs) -> bool {
    if inputs.is_deterministic_ratio() {
        return true;
    }
    let ctx = Context::new(inputs);
    let m = inputs.len();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
    let pair2 = |i, j| ctx.pair_term(i, j, Deriv::Second);
    let pair3 = |i, j| ctx.pair_term(i, j, Deriv::Third);
    let pair9 = |i, j| ctx.pair_ratio_term(i, j);
    let triple = |i, j, k| ctx.triple_term(i, j, k);
    close(sym_pair_sum(m, pair2), full_pair_sum(m, pair2))
        && close(sym_pair_sum(m, pair3), full_pair_sum(m, pair3))
        && close(sym_pair_sum(m, pair9), full_pair_sum(m, pair9))
        && close(sym_triple_sum(m, triple), full_triple_sum(m, triple))
}

#[derive(Clone, Copy)]
enum Deriv {
    First,
    Second,
    Third,
}

struct Context<'a> {
    inp: &'a ExpansionInputs,
    kernel: StrikeKernel,
    /// `ln E[R] + v-bar_i`: log forward of the single-asset identity.
    asset_forward: Vec<f64>,
}

impl<'a> Context<'a> {
    fn new(inp: &'a ExpansionInputs) -> Self {
        let kernel = StrikeKernel::new(inp.kappa_star, inp.nu2, inp.discount, inp.direction);
        let ln_er = inp.ln_mean_ratio();
        let asset_forward = inp.vbar.iter().map(|v| ln_er + v).collect();
        Self { inp, kernel, asset_forward }
    }

    fn d(&self, deriv: Deriv, ln_forward: f64) -> f64 {
        match deriv {
            Deriv::First => self.kernel.dk(ln_forward),
            Deriv::Second => self.kernel.d2k(ln_forward),
            Deriv::Third => self.kernel.d3k(ln_forward),
        }
    }

    fn star(&self, i: usize) -> f64 {
        self.inp.weights_star[i]
    }

    /// `sum_i a*_i exp(s_i) D(f_i)`.
    fn weighted_single<F: Fn(usize) -> (f64, f64)>(&self, deriv: Deriv, form: F) -> f64 {
        (0..self.inp.len())
            .map(|i| {
                let (s, f) = form(i);
                self.star(i) * s.exp() * self.d(deriv, f)
            })
            .collect::<CompensatedSum>()
            .value()
    }

    /// `a*_i a*_j E[S_i S_j / G_n h^(k)]`.
    fn pair_term(&self, i: usize, j: usize, deriv: Deriv) -> f64 {
        let inp = self.inp;
        let scale = inp.nu2_n + inp.cov[(i, j)] + inp.vbar_neg[i] + inp.vbar_neg[j];
        let fwd = inp.vbar[i] + inp.vbar[j] - 2.0 * inp.nu2_np + 2.0 * inp.nu2_n;
        self.star(i) * self.star(j) * scale.exp() * self.d(deriv, fwd)
    }

    /// `a*_i a*_j E[S_i S_j G_p / G_n^2 h''']`.
    fn pair_ratio_term(&self, i: usize, j: usize) -> f64 {
        let inp = self.inp;
        let scale = 3.0 * inp.nu2_n - 2.0 * inp.nu2_np
            + inp.vbar[i]
            + inp.vbar[j]
            + inp.cov[(i, j)]
            + inp.vbar_neg[i]
            + inp.vbar_neg[j];
        let fwd = inp.vbar[i] + inp.vbar[j] + inp.nu2 - 2.0 * inp.nu2_np + 2.0 * inp.nu2_n;
        self.star(i) * self.star(j) * scale.exp() * self.kernel.d3k(fwd)
    }

    /// `a*_i a*_j a*_k E[S_i S_j S_k / G_n^2 h''']`.
    fn triple_term(&self, i: usize, j: usize, k: usize) -> f64 {
        let inp = self.inp;
        let v = &inp.cov;
        let scale = v[(i, j)]
            + v[(i, k)]
            + v[(j, k)]
            + 2.0 * (inp.vbar_neg[i] + inp.vbar_neg[j] + inp.vbar_neg[k])
            + 3.0 * inp.nu2_n;
        let fwd = inp.vbar[i] + inp.vbar[j] + inp.vbar[k] - 3.0 * inp.nu2_np + 3.0 * inp.nu2_n;
        self.star(i) * self.star(j) * self.star(k) * scale.exp() * self.kernel.d3k(fwd)
    }

    fn first_order(&self) -> Vec<(&'static str, f64)> {
        let inp = self.inp;
        let (ap, ks, nu2) = (inp.a_p, inp.kappa_star, inp.nu2);
        vec![
            ("gp", ap * self.kernel.dk(nu2)),
            ("kappa_gn", -ap * ks * self.kernel.dk(0.0)),
            ("assets", -ap * self.weighted_single(Deriv::First, |i| (0.0, self.asset_forward[i]))),
        ]
    }

    fn second_order(&self) -> Vec<(&'static str, f64)> {
        let inp = self.inp;
        let (ap, ks, nu2) = (inp.a_p, inp.kappa_star, inp.nu2);
        let m = inp.len();
        vec![
            ("gp_ratio", ap * 0.5 * nu2.exp() * self.kernel.d2k(2.0 * nu2)),
            ("kappa2_gn", ap * 0.5 * ks * ks * self.kernel.d2k(0.0)),
            ("kappa_gp", -ap * ks * self.kernel.d2k(nu2)),
            (
                "assets_ratio",
                -ap * self.weighted_single(Deriv::Second, |i| {
                    let c = self.asset_forward[i];
                    (c, nu2 + c)
                }),
            ),
            ("kappa_assets", ap * ks * self.weighted_single(Deriv::Second, |i| (0.0, self.asset_forward[i]))),
            ("asset_pairs", ap * 0.5 * sym_pair_sum(m, |i, j| self.pair_term(i, j, Deriv::Second))),
        ]
    }

    fn third_order(&self) -> Vec<(&'static str, f64)> {
        let inp = self.inp;
        let (ap, ks, nu2) = (inp.a_p, inp.kappa_star, inp.nu2);
        let m = inp.len();
        vec![
            ("gp_ratio2", ap * (3.0 * nu2).exp() / 6.0 * self.kernel.d3k(3.0 * nu2)),
            ("kappa_gp_ratio", -ap * ks * nu2.exp() / 2.0 * self.kernel.d3k(2.0 * nu2)),
            ("kappa2_gp", ap * ks * ks / 2.0 * self.kernel.d3k(nu2)),
            ("kappa3_gn", -ap * ks * ks * ks / 6.0 * self.kernel.d3k(0.0)),
            (
                "assets_ratio2",
                -ap * 0.5
                    * self.weighted_single(Deriv::Third, |i| {
                        let c = self.asset_forward[i];
                        (nu2 + 2.0 * c, 2.0 * nu2 + c)
                    }),
            ),
            (
                "kappa2_assets",
                -ap * ks * ks / 2.0 * self.weighted_single(Deriv::Third, |i| (0.0, self.asset_forward[i])),
            ),
            (
                "kappa_assets_ratio",
                ap * ks
                    * self.weighted_single(Deriv::Third, |i| {
                        let c = self.asset_forward[i];
                        (c, nu2 + c)
                    }),
            ),
            ("asset_pairs_ratio", ap * 0.5 * sym_pair_sum(m, |i, j| self.pair_ratio_term(i, j))),
            ("kappa_asset_pairs", -ap * ks / 2.0 * sym_pair_sum(m, |i, j| self.pair_term(i, j, Deriv::Third))),
            ("asset_triples", -ap / 6.0 * sym_triple_sum(m, |i, j, k| self.triple_term(i, j, k))),
        ]
    }
}
