use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use spreadkit::market_model::schema::InstrumentFile;
use spreadkit_ffi::*;

fn instrument(name: &str) -> CString {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/instruments").join(name);
    CString::new(std::fs::read_to_string(path).unwrap()).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(sk_last_error_message()) }.to_str().unwrap().to_owned()
}

fn pricer(name: &str) -> *mut SkPricer {
    let json = instrument(name);
    let mut handle = ptr::null_mut();
    let status = unsafe { sk_pricer_from_json(json.as_ptr(), &mut handle) };
    assert_eq!(status, SkStatus::Ok, "{}", last_error());
    assert!(!handle.is_null());
    handle
}

#[test]
fn prices_match_library() {
    let handle = pricer("spread_k-100.json");
    let mut prices = SkPrices { vg: [0.0; 4], kappa_star: 0.0, nu2: 0.0 };
    assert_eq!(unsafe { sk_pricer_price(handle, SK_PROXY_GEOMETRIC, &mut prices) }, SkStatus::Ok);

    let text = instrument("spread_k-100.json").into_string().unwrap();
    let basket = InstrumentFile::from_json(&text).unwrap().to_priceable().unwrap().reduced().unwrap();
    let expected = spreadkit::price_reduced(&basket, spreadkit::ProxyKind::Geometric, 3).unwrap();
    assert_eq!(prices.vg.to_vec(), expected.vg);
    assert!(prices.kappa_star > 0.0 && prices.nu2 > 0.0);

    let mut n = 0usize;
    assert_eq!(unsafe { sk_pricer_asset_count(handle, &mut n) }, SkStatus::Ok);
    assert_eq!(n, basket.len());
    unsafe { sk_pricer_free(handle) };
}

#[test]
fn levy_proxy_differs_from_geometric() {
    let handle = pricer("spread_k-100.json");
    let mut geo = SkPrices { vg: [0.0; 4], kappa_star: 0.0, nu2: 0.0 };
    let mut levy = geo;
    unsafe {
        assert_eq!(sk_pricer_price(handle, SK_PROXY_GEOMETRIC, &mut geo), SkStatus::Ok);
        assert_eq!(sk_pricer_price(handle, SK_PROXY_LEVY, &mut levy), SkStatus::Ok);
        assert_eq!(sk_pricer_price(handle, 7, &mut levy), SkStatus::Validation);
        sk_pricer_free(handle);
    }
    assert_ne!(geo.vg[0], levy.vg[0]);
    assert!(last_error().contains("proxy"));
}

#[test]
fn mc_agrees_with_expansion() {
    let handle = pricer("spread_k-100.json");
    let mut prices = SkPrices { vg: [0.0; 4], kappa_star: 0.0, nu2: 0.0 };
    let mut mc = SkMcResult { price: 0.0, std_error: 0.0, paths_used: 0 };
    unsafe {
        assert_eq!(sk_pricer_price(handle, SK_PROXY_GEOMETRIC, &mut prices), SkStatus::Ok);
        assert_eq!(sk_pricer_mc(handle, 200_000, 7, &mut mc), SkStatus::Ok);
        sk_pricer_free(handle);
    }
    assert_eq!(mc.paths_used, 200_000);
    assert!((mc.price - prices.vg[3]).abs() < 4.0 * mc.std_error + 5e-3, "{mc:?} vs {prices:?}");
}

#[test]
fn asian_pricer_runs_mc() {
    let handle = pricer("asian_spread_k25.json");
    let mut prices = SkPrices { vg: [0.0; 4], kappa_star: 0.0, nu2: 0.0 };
    let mut mc = SkMcResult { price: 0.0, std_error: 0.0, paths_used: 0 };
    unsafe {
        assert_eq!(sk_pricer_price(handle, SK_PROXY_GEOMETRIC, &mut prices), SkStatus::Ok);
        assert_eq!(sk_pricer_mc(handle, 100_000, 3, &mut mc), SkStatus::Ok);
        sk_pricer_free(handle);
    }
    assert!((mc.price - prices.vg[3]).abs() < 4.0 * mc.std_error + 5e-3, "{mc:?} vs {prices:?}");
}

#[test]
fn black_matches_library() {
    let mut call = 0.0;
    let mut put = 0.0;
    unsafe {
        assert_eq!(sk_black(100.0, 95.0, 0.04, 0.9, 1, &mut call), SkStatus::Ok);
        assert_eq!(sk_black(100.0, 95.0, 0.04, 0.9, -1, &mut put), SkStatus::Ok);
    }
    assert!((call - put - 0.9 * 5.0).abs() < 1e-12);
    assert_eq!(unsafe { sk_black(100.0, 95.0, 0.04, 0.9, 0, &mut call) }, SkStatus::Validation);
    assert_eq!(unsafe { sk_black(100.0, 95.0, 0.04, 0.9, 1, ptr::null_mut()) }, SkStatus::NullArgument);
}

#[test]
fn bad_input_reports_status() {
    let mut handle = ptr::null_mut();
    let garbage = CString::new("{not json").unwrap();
    assert_eq!(unsafe { sk_pricer_from_json(garbage.as_ptr(), &mut handle) }, SkStatus::Schema);
    assert!(handle.is_null());
    assert!(!last_error().is_empty());

    assert_eq!(unsafe { sk_pricer_from_json(ptr::null(), &mut handle) }, SkStatus::NullArgument);

    let bad_utf8 = CString::new(vec![0x7b, 0xff, 0x7d]).unwrap();
    assert_eq!(unsafe { sk_pricer_from_json(bad_utf8.as_ptr(), &mut handle) }, SkStatus::InvalidUtf8);

    let mut n = 0usize;
    assert_eq!(unsafe { sk_pricer_asset_count(ptr::null(), &mut n) }, SkStatus::NullArgument);
    unsafe { sk_pricer_free(ptr::null_mut()) };
}

#[test]
fn not_psd_correlation_is_validation() {
    let text = instrument("spread_k60.json").into_string().unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["correlation"] = serde_json::json!([[1.0, 1.5], [1.5, 1.0]]);
    let json = CString::new(doc.to_string()).unwrap();
    let mut handle = ptr::null_mut();
    assert_eq!(unsafe { sk_pricer_from_json(json.as_ptr(), &mut handle) }, SkStatus::Validation);
    assert!(handle.is_null());
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(sk_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/spreadkit.h");
    assert!(header.exists());
    let text = std::fs::read_to_string(&header).unwrap();
    for symbol in ["sk_pricer_from_json", "sk_pricer_free", "sk_pricer_price", "sk_pricer_mc", "sk_black", "SK_STATUS_OK"] {
        assert!(text.contains(symbol), "{symbol} missing from header");
    }
    let Ok(status) = Command::new("cc").args(["-fsyntax-only", "-x", "c"]).arg(&header).status() else {
        eprintln!("cc not found; skipping syntax check");
        return;
    };
    assert!(status.success());
}
