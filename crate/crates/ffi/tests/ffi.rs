use std::ffi::{c_char, c_int, CString};
use std::path::Path;
use std::ptr;

use threshold_lab_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { tl_last_error(buf.as_mut_ptr(), buf.len()) };
    let s: Vec<u8> = buf.iter().take(n.min(255)).map(|&c| c as u8).collect();
    String::from_utf8(s).unwrap()
}

#[test]
fn classify_through_handles() {
    let cfg = tl_config_square_well(5.783185963);
    let mut medium = ptr::null_mut();
    unsafe {
        assert_eq!(tl_medium_new(cfg, &mut medium), TlStatus::Ok);
        let mut class = TlClassification::Regular;
        assert_eq!(tl_medium_classification(medium, &mut class), TlStatus::Ok);
        assert_eq!(class, TlClassification::FirstKind);
        tl_medium_free(medium);
        tl_config_free(cfg);
    }
}

#[test]
fn tune_and_kernel() {
    let cfg = tl_config_square_well(1.0);
    let mut c = 0.0;
    unsafe {
        assert_eq!(tl_tune(cfg, 0, &mut c), TlStatus::Ok);
        tl_config_free(cfg);
    }
    assert!((c - 5.783185963).abs() < 1e-8);
    let (mut re, mut im) = (0.0, 0.0);
    unsafe {
        assert_eq!(tl_free_kernel_4d(1e-3, 1, 1.0, &mut re, &mut im), TlStatus::Ok);
    }
    // G0 = 1/(4 pi^2 d^2) at small lambda
    assert!((re - 1.0 / (4.0 * std::f64::consts::PI.powi(2))).abs() < 1e-4, "{re}");
    unsafe {
        assert_eq!(tl_free_kernel_4d(-1.0, 1, 1.0, &mut re, &mut im), TlStatus::Domain);
    }
    assert!(last_error().contains("domain"));
}

#[test]
fn config_errors_and_nulls() {
    let bad = CString::new("[potential]\nfamily = \"square_well\"\nc = 1.0\nradius = -1.0\n").unwrap();
    let mut cfg = ptr::null_mut();
    unsafe {
        assert_eq!(tl_config_from_toml(bad.as_ptr(), &mut cfg), TlStatus::Config);
        assert!(cfg.is_null());
        assert_eq!(tl_config_from_toml(ptr::null(), &mut cfg), TlStatus::NullPointer);
        assert_eq!(tl_series_len(ptr::null()), 0);
    }
    assert!(last_error().contains("null"));
}

#[test]
fn evolve_regular_series() {
    let text = CString::new(
        "[potential]\nfamily = \"square_well\"\nc = 1.0\nradius = 1.0\n[evolution]\nt_min = 1e3\nt_max = 1e6\nt_count = 12\n",
    )
    .unwrap();
    let mut cfg = ptr::null_mut();
    let mut medium = ptr::null_mut();
    let mut series = ptr::null_mut();
    unsafe {
        assert_eq!(tl_config_from_toml(text.as_ptr(), &mut cfg), TlStatus::Ok);
        assert_eq!(tl_medium_new(cfg, &mut medium), TlStatus::Ok);
        assert_eq!(tl_evolve(medium, cfg, &mut series), TlStatus::Ok);
        assert_eq!(tl_series_len(series), 48);
        let (mut t, mut p, mut re, mut im, mut err) = (0.0, 0usize, 0.0, 0.0, 0.0);
        assert_eq!(tl_series_row(series, 0, &mut t, &mut p, &mut re, &mut im, &mut err), TlStatus::Ok);
        assert!(t > 0.0 && err >= 0.0);
        assert_eq!(tl_series_row(series, 48, &mut t, &mut p, &mut re, &mut im, &mut err), TlStatus::OutOfRange);
        let mut slope = 0.0;
        assert_eq!(tl_series_slope(series, 0, &mut slope), TlStatus::Ok);
        assert!((slope + 2.0).abs() < 0.05, "{slope}");
        tl_series_free(series);
        tl_medium_free(medium);
        tl_config_free(cfg);
    }
}

#[test]
fn verify_lemma() {
    let id = CString::new("log_decay").unwrap();
    let (mut pass, mut sup): (c_int, f64) = (0, 0.0);
    unsafe {
        assert_eq!(tl_verify(id.as_ptr(), 1, &mut pass, &mut sup), TlStatus::Ok);
    }
    assert_eq!(pass, 1);
    assert!(sup > 0.0);
    let bad = CString::new("no_such_case").unwrap();
    unsafe {
        assert_eq!(tl_verify(bad.as_ptr(), 1, &mut pass, &mut sup), TlStatus::Config);
    }
}

#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/threshold_lab.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in ["tl_config_from_toml", "tl_medium_new", "tl_evolve", "tl_series_row", "tl_verify", "tl_last_error"] {
        assert!(text.contains(f), "{f} missing from header");
    }
    // syntax check when a C compiler is around
    if let Ok(out) = std::process::Command::new("cc").args(["-fsyntax-only", "-x", "c", "-std=c99", "-Wall", "-Werror"]).arg(&header).output() {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
