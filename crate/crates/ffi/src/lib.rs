//! C ABI over `spreadkit`.
//!
//! A pricer is built from an instrument JSON document and released with
//! [`sk_pricer_free`]. Every fallible call returns an [`SkStatus`]; on failure
//! [`sk_last_error_message`] describes the error for the calling thread.
//! Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use spreadkit::black76::{black, BlackParams};
use spreadkit::market_model::schema::{InstrumentFile, Priceable};
use spreadkit::mc_oracle::{mc_asian_basket, mc_price, McConfig};
use spreadkit::proxy::{build_inputs, Prepared};
use spreadkit::{Direction, Error, ProxyKind, ReducedBasket};

pub const SK_PROXY_GEOMETRIC: u32 = 0;
pub const SK_PROXY_LEVY: u32 = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkStatus {
    Ok = 0,
    NullArgument = 1,
    /// Malformed JSON or a document that does not match the schema.
    Schema = 2,
    /// Numerically infeasible input (e.g. Levy matching, factorization).
    Numerical = 3,
    /// Well-formed input that violates a model invariant.
    Validation = 4,
    Panic = 5,
    InvalidUtf8 = 6,
}

/// Prices at orders 0 to 3 and the effective strike and ratio variance.
/// `kappa_star` and `nu2` are NaN when the price is exact.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkPrices {
    pub vg: [f64; 4],
    pub kappa_star: f64,
    pub nu2: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkMcResult {
    pub price: f64,
    pub std_error: f64,
    pub paths_used: u64,
}

/// Opaque pricer handle.
pub struct SkPricer {
    priceable: Priceable,
    basket: ReducedBasket,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> SkStatus {
    match err {
        Error::Schema(_) | Error::Io(_) | Error::UnknownCase(_) => SkStatus::Schema,
        Error::LevyInfeasible { .. } | Error::Domain(_) | Error::Factorization { .. } => SkStatus::Numerical,
        _ => SkStatus::Validation,
    }
}

fn guard<F: FnOnce() -> Result<(), SkStatus>>(f: F) -> SkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            SkStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => {
            set_last_error("internal panic");
            SkStatus::Panic
        }
    }
}

fn fail(err: Error) -> SkStatus {
    set_last_error(&err.to_string());
    status_of(&err)
}

fn null(what: &str) -> SkStatus {
    set_last_error(&format!("{what} is null"));
    SkStatus::NullArgument
}

/// Parses an instrument document and stores a new pricer in `*out`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sk_pricer_from_json(json: *const c_char, out: *mut *mut SkPricer) -> SkStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|_| {
            set_last_error("json is not valid UTF-8");
            SkStatus::InvalidUtf8
        })?;
        let build = || -> spreadkit::Result<SkPricer> {
            let priceable = InstrumentFile::from_json(text)?.to_priceable()?;
            let basket = priceable.reduced()?;
            Ok(SkPricer { priceable, basket })
        };
        let pricer = build().map_err(fail)?;
        *out = Box::into_raw(Box::new(pricer));
        Ok(())
    })
}

/// Releases a pricer. Null is ignored.
///
/// # Safety
/// `pricer` must come from [`sk_pricer_from_json`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sk_pricer_free(pricer: *mut SkPricer) {
    if !pricer.is_null() {
        drop(Box::from_raw(pricer));
    }
}

/// Number of assets in the reduced basket (pseudo-assets for Asian payoffs).
///
/// # Safety
/// `pricer` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sk_pricer_asset_count(pricer: *const SkPricer, out: *mut usize) -> SkStatus {
    guard(|| {
        let pricer = pricer.as_ref().ok_or_else(|| null("pricer"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = pricer.basket.len();
        Ok(())
    })
}

/// Prices at orders 0 to 3 with the given proxy (`SK_PROXY_*`).
///
/// # Safety
/// `pricer` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sk_pricer_price(pricer: *const SkPricer, proxy: u32, out: *mut SkPrices) -> SkStatus {
    guard(|| {
        let pricer = pricer.as_ref().ok_or_else(|| null("pricer"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let kind = match proxy {
            SK_PROXY_GEOMETRIC => ProxyKind::Geometric,
            SK_PROXY_LEVY => ProxyKind::Levy,
            other => return Err(fail(Error::Validation(format!("unknown proxy {other}")))),
        };
        let prices = spreadkit::price_reduced(&pricer.basket, kind, 3).map_err(fail)?;
        let folded = pricer.basket.folded().map_err(fail)?;
        let (kappa_star, nu2) = match build_inputs(&folded, kind).map_err(fail)? {
            Prepared::Expansion(e) => (e.kappa_star, e.nu2),
            Prepared::Exact(_) => (f64::NAN, f64::NAN),
        };
        *out = SkPrices { vg: [prices.vg[0], prices.vg[1], prices.vg[2], prices.vg[3]], kappa_star, nu2 };
        Ok(())
    })
}

/// Monte Carlo price of the instrument (antithetic, control variate, 1000 batches).
///
/// # Safety
/// `pricer` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sk_pricer_mc(pricer: *const SkPricer, paths: u64, seed: u64, out: *mut SkMcResult) -> SkStatus {
    guard(|| {
        let pricer = pricer.as_ref().ok_or_else(|| null("pricer"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let config = McConfig { paths, seed, ..McConfig::default() };
        let r = match &pricer.priceable {
            Priceable::Basket { .. } => mc_price(&pricer.basket, &config),
            Priceable::Asian { spec, model } => mc_asian_basket(spec, model, &config),
        }
        .map_err(fail)?;
        *out = SkMcResult { price: r.price, std_error: r.std_error, paths_used: r.paths_used };
        Ok(())
    })
}

/// Black-76 price; `direction` is +1 for a call and -1 for a put.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sk_black(
    forward: f64,
    strike: f64,
    variance: f64,
    discount: f64,
    direction: i32,
    out: *mut f64,
) -> SkStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let direction = match direction {
            1 => Direction::Call,
            -1 => Direction::Put,
            other => return Err(fail(Error::Validation(format!("direction must be +1 or -1 (got {other})")))),
        };
        let params = BlackParams::new(forward, strike, variance, discount, direction).map_err(fail)?;
        *out = black(&params);
        Ok(())
    })
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn sk_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
