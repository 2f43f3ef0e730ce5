//! Black-76 price and its first three strike derivatives.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::market_model::Direction;

/// Standard normal CDF through `erfc`, accurate to about 1e-16 absolute.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlackParams {
    pub forward: f64,
    pub strike: f64,
    /// Total variance `int_0^T sigma^2 ds`.
    pub variance: f64,
    pub discount: f64,
    pub direction: Direction,
}

impl BlackParams {
    pub fn new(forward: f64, strike: f64, variance: f64, discount: f64, direction: Direction) -> Result<Self> {
        if !(forward.is_finite() && forward > 0.0) {
            return Err(Error::Domain(format!("forward must be > 0 (got {forward})")));
        }
        if !(variance.is_finite() && variance >= 0.0) {
            return Err(Error::Domain(format!("variance must be >= 0 (got {variance})")));
        }
        if !(discount > 0.0 && discount <= 1.0) {
            return Err(Error::Domain(format!("discount must lie in (0, 1] (got {discount})")));
        }
        if !strike.is_finite() {
            return Err(Error::Domain("strike must be finite".into()));
        }
        Ok(Self { forward, strike, variance, discount, direction })
    }

    /// `(d1, d2)`; only meaningful for `K > 0` and `v > 0`.
    pub fn d1_d2(&self) -> (f64, f64) {
        let s = self.variance.sqrt();
        let d1 = ((self.forward / self.strike).ln() + 0.5 * self.variance) / s;
        (d1, d1 - s)
    }
}

/// `eta B [F Phi(eta d1) - K Phi(eta d2)]`, with the intrinsic limits at `v = 0` and `K <= 0`.
pub fn black(p: &BlackParams) -> f64 {
    let eta = p.direction.eta();
    if p.strike <= 0.0 {
        return match p.direction {
            Direction::Call => p.discount * (p.forward - p.strike),
            Direction::Put => 0.0,
        };
    }
    if p.variance == 0.0 {
        return p.discount * (eta * (p.forward - p.strike)).max(0.0);
    }
    let (d1, d2) = p.d1_d2();
    eta * p.discount * (p.forward * norm_cdf(eta * d1) - p.strike * norm_cdf(eta * d2))
}

/// `-eta B Phi(eta d2)`.
pub fn black_dk(p: &BlackParams) -> Result<f64> {
    if p.strike <= 0.0 {
        return Err(Error::Domain("strike derivative needs K > 0".into()));
    }
    let eta = p.direction.eta();
    if p.variance == 0.0 {
        let itm = eta * (p.forward - p.strike) > 0.0;
        return Ok(if itm { -eta * p.discount } else { 0.0 });
    }
    let (_, d2) = p.d1_d2();
    Ok(-eta * p.discount * norm_cdf(eta * d2))
}

/// `B phi(d2) / (K sqrt v)`, the discounted density of the terminal forward.
pub fn black_d2k(p: &BlackParams) -> Result<f64> {
    check_density_domain(p)?;
    let (_, d2) = p.d1_d2();
    Ok(p.discount * norm_pdf(d2) / (p.strike * p.variance.sqrt()))
}

/// `B phi(d2) / (K^2 sqrt v) (d2 / sqrt v - 1)`.
pub fn black_d3k(p: &BlackParams) -> Result<f64> {
    check_density_domain(p)?;
    let s = p.variance.sqrt();
    let (_, d2) = p.d1_d2();
    Ok(p.discount * norm_pdf(d2) / (p.strike * p.strike * s) * (d2 / s - 1.0))
}

fn check_density_domain(p: &BlackParams) -> Result<()> {
    if p.strike <= 0.0 || p.variance <= 0.0 {
        return Err(Error::Domain(format!(
            "second and third strike derivatives need K > 0 and v > 0 (got K = {}, v = {})",
            p.strike, p.variance
        )));
    }
    Ok(())
}

/// Strike derivatives at a fixed strike and variance, taking the forward in log space.
///
/// The expansions evaluate the same `(K, v)` at many forwards of the form
/// `exp(x)`; passing `x` avoids an `exp`/`ln` round trip.
#[derive(Debug, Clone, Copy)]
pub struct StrikeKernel {
    ln_strike: f64,
    strike: f64,
    sqrt_v: f64,
    half_v: f64,
    discount: f64,
    eta: f64,
}

impl StrikeKernel {
    /// Requires `K > 0` and `v > 0`.
    pub fn new(strike: f64, variance: f64, discount: f64, direction: Direction) -> Self {
        debug_assert!(strike > 0.0 && variance > 0.0);
        Self {
            ln_strike: strike.ln(),
            strike,
            sqrt_v: variance.sqrt(),
            half_v: 0.5 * variance,
            discount,
            eta: direction.eta(),
        }
    }

    #[inline]
    fn d2(&self, ln_forward: f64) -> f64 {
        (ln_forward - self.ln_strike - self.half_v) / self.sqrt_v
    }

    pub fn price(&self, ln_forward: f64) -> f64 {
        let d2 = self.d2(ln_forward);
        let d1 = d2 + self.sqrt_v;
        self.eta * self.discount * (ln_forward.exp() * norm_cdf(self.eta * d1) - self.strike * norm_cdf(self.eta * d2))
    }

    #[inline]
    pub fn dk(&self, ln_forward: f64) -> f64 {
        -self.eta * self.discount * norm_cdf(self.eta * self.d2(ln_forward))
    }

    #[inline]
    pub fn d2k(&self, ln_forward: f64) -> f64 {
        self.discount * norm_pdf(self.d2(ln_forward)) / (self.strike * self.sqrt_v)
    }

    #[inline]
    pub fn d3k(&self, ln_forward: f64) -> f64 {
        let d2 = self.d2(ln_forward);
        self.discount * norm_pdf(d2) / (self.strike * self.strike * self.sqrt_v) * (d2 / self.sqrt_v - 1.0)
    }
}
