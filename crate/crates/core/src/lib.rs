//! Closed-form pricing of Asian basket spread options under Black-Scholes
//! with term structures.
//!
//! The arithmetic legs of the spread are replaced by mean-matched geometric
//! averages (the proxy, order 0) and the hockey-stick payoff is expanded
//! around that proxy up to third order. Every correction term reduces to a
//! Black-76 strike derivative, so no integration or root solving is needed.
//!
//! Pipeline:
//! 1. [`market_model`] reduces Asian and Asian-basket payoffs to a vanilla
//!    basket spread and folds the strike into a zero-volatility asset.
//! 2. [`proxy`] builds the scalar [`proxy::ExpansionInputs`].
//! 3. [`expansion`] evaluates orders 0 to 3.
//!
//! [`mc_oracle`] is an independent Monte Carlo pricer used for validation
//! and [`harness`] replays the bundled reference tables.

pub mod black76;
pub mod cli;
pub mod error;
pub mod expansion;
pub mod harness;
pub mod market_model;
pub mod mc_oracle;
pub mod numeric;
pub mod proxy;

pub use error::{Error, Result};
pub use expansion::{price_orders, OrderedPrice, TermContribution};
pub use market_model::{
    AsianBasketSpec, Asset, BasketSpreadInstrument, CovarianceMatrix, Direction, MarketModel,
    ReducedBasket, VolCurve,
};
pub use proxy::{ExpansionInputs, ProxyKind};

/// Prices a (possibly unfolded) basket spread at every order up to `max_order`.
///
/// Folds the strike, builds the proxy and evaluates the expansion. Degenerate
/// configurations (no stochastic negative leg, zero ratio variance) return
/// their exact value at every order.
pub fn price_basket(
    instrument: &BasketSpreadInstrument,
    model: &MarketModel,
    proxy: ProxyKind,
    max_order: usize,
) -> Result<OrderedPrice> {
    let basket = ReducedBasket::new(instrument, model)?;
    price_reduced(&basket, proxy, max_order)
}

/// Same as [`price_basket`] on an already assembled [`ReducedBasket`].
pub fn price_reduced(
    basket: &ReducedBasket,
    proxy: ProxyKind,
    max_order: usize,
) -> Result<OrderedPrice> {
    let folded = basket.folded()?;
    match proxy::build_inputs(&folded, proxy)? {
        proxy::Prepared::Expansion(inputs) => Ok(price_orders(&inputs, max_order)),
        proxy::Prepared::Exact(value) => Ok(OrderedPrice::exact(value, max_order)),
    }
}

/// Prices an Asian basket spread: fixings, reduction, then [`price_reduced`].
pub fn price_asian_basket(
    spec: &AsianBasketSpec,
    model: &MarketModel,
    proxy: ProxyKind,
    max_order: usize,
) -> Result<OrderedPrice> {
    let (instrument, reduced_model) = market_model::reduce_asian_basket(spec, model)?;
    price_basket(&instrument, &reduced_model, proxy, max_order)
}
