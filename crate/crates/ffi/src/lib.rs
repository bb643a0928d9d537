//! C interface to `threshold-lab`.
//!
//! Objects cross the boundary as opaque handles created by `tl_*_new` style
//! functions and released by the matching `tl_*_free`. Every fallible call returns a
//! [`TlStatus`]; the message of the last failure on the calling thread is available
//! through [`tl_last_error`]. Panics are caught and reported as
//! [`TlStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use threshold_lab::cli;
use threshold_lab::config::RunConfig;
use threshold_lab::decayfit::{fit, Basis, RateModel};
use threshold_lab::evolution::{self, Medium, TimeSeries};
use threshold_lab::kernels::{self, SpectralPoint};
use threshold_lab::oscint::{self, VerifyConfig};
use threshold_lab::spectral::Classification;
use threshold_lab::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Domain = 4,
    Numerical = 5,
    OutOfRange = 6,
    Io = 7,
    Unknown = 8,
    Panic = 99,
}

/// Zero-energy classification.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TlClassification {
    Regular = 0,
    FirstKind = 1,
    SecondKind = 2,
    ThirdKind = 3,
}

/// A validated run configuration.
pub struct TlConfig(RunConfig);

/// A discretized and classified potential (or the free case).
pub struct TlMedium(Medium);

/// A propagator time series.
pub struct TlSeries(TimeSeries);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> TlStatus {
    match e {
        Error::Config(_) => TlStatus::Config,
        Error::Domain(_) | Error::UnsupportedOrder(_) | Error::SingularDistance | Error::EmptyPotential => TlStatus::Domain,
        Error::Range { .. } | Error::StaleOracle { .. } => TlStatus::OutOfRange,
        Error::Io(_) => TlStatus::Io,
        Error::Unknown(_) => TlStatus::Unknown,
        _ => TlStatus::Numerical,
    }
}

/// Run `f`, recording errors and catching panics.
fn guard<F>(f: F) -> TlStatus
where
    F: FnOnce() -> Result<(), TlStatus>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TlStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside threshold-lab");
            TlStatus::Panic
        }
    }
}

fn fail(e: Error) -> TlStatus {
    set_error(&e.to_string());
    status_of(&e)
}

fn null() -> TlStatus {
    set_error("null pointer argument");
    TlStatus::NullPointer
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, TlStatus> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("argument is not valid UTF-8");
        TlStatus::InvalidUtf8
    })
}

unsafe fn out_ptr<'a, T>(p: *mut T) -> Result<&'a mut T, TlStatus> {
    p.as_mut().ok_or_else(null)
}

unsafe fn in_ptr<'a, T>(p: *const T) -> Result<&'a T, TlStatus> {
    p.as_ref().ok_or_else(null)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copy the last error message of this thread into `buf` (NUL-terminated, truncated
/// to `len`). Returns the full message length without the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn tl_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let bytes = e.borrow();
        let bytes = bytes.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Parse a TOML run configuration.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tl_config_from_toml(toml: *const c_char, out: *mut *mut TlConfig) -> TlStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let text = str_arg(toml)?;
        let cfg = RunConfig::from_toml(text).map_err(fail)?;
        *out = Box::into_raw(Box::new(TlConfig(cfg)));
        Ok(())
    })
}

/// Default configuration for a unit-radius square well of coupling `c`.
#[no_mangle]
pub extern "C" fn tl_config_square_well(c: f64) -> *mut TlConfig {
    Box::into_raw(Box::new(TlConfig(RunConfig::square_well(c))))
}

/// # Safety
/// `cfg` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tl_config_free(cfg: *mut TlConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Discretize and classify the configured potential.
///
/// # Safety
/// `cfg` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tl_medium_new(cfg: *const TlConfig, out: *mut *mut TlMedium) -> TlStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let cfg = &in_ptr(cfg)?.0;
        let m = Medium::new(cfg.potential.clone(), cfg.spectral.clone()).map_err(fail)?;
        *out = Box::into_raw(Box::new(TlMedium(m)));
        Ok(())
    })
}

/// # Safety
/// `medium` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tl_medium_classification(medium: *const TlMedium, out: *mut TlClassification) -> TlStatus {
    guard(|| {
        let out = out_ptr(out)?;
        *out = match in_ptr(medium)?.0.classification() {
            Classification::Regular => TlClassification::Regular,
            Classification::FirstKind => TlClassification::FirstKind,
            Classification::SecondKind => TlClassification::SecondKind,
            Classification::ThirdKind => TlClassification::ThirdKind,
        };
        Ok(())
    })
}

/// # Safety
/// `medium` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tl_medium_free(medium: *mut TlMedium) {
    if !medium.is_null() {
        drop(Box::from_raw(medium));
    }
}

/// Coupling at which channel `ell` first reaches threshold along the configured family.
///
/// # Safety
/// `cfg` must be a live handle and `c_star` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tl_tune(cfg: *const TlConfig, ell: usize, c_star: *mut f64) -> TlStatus {
    guard(|| {
        let c_star = out_ptr(c_star)?;
        let mut cfg = in_ptr(cfg)?.0.clone();
        cfg.tune.channels = vec![ell];
        let rows = cli::tune(&cfg).map_err(fail)?;
        *c_star = rows[0].c_star;
        Ok(())
    })
}

/// Propagator series for the configured multiplier, times and pairs.
///
/// # Safety
/// Handles must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tl_evolve(medium: *const TlMedium, cfg: *const TlConfig, out: *mut *mut TlSeries) -> TlStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let medium = &in_ptr(medium)?.0;
        let req = in_ptr(cfg)?.0.evolution.request().map_err(fail)?;
        let ts = match req.density {
            evolution::Density::Full => evolution::stone_evolve(medium, &req),
            evolution::Density::Born(k) => evolution::born_term(medium, k, &req),
        }
        .map_err(fail)?;
        *out = Box::into_raw(Box::new(TlSeries(ts)));
        Ok(())
    })
}

/// Number of accepted rows.
///
/// # Safety
/// `series` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tl_series_len(series: *const TlSeries) -> usize {
    series.as_ref().map_or(0, |s| s.0.rows.len())
}

/// Row `i`: time, pair index, value and error estimate.
///
/// # Safety
/// `series` must be a live handle; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tl_series_row(
    series: *const TlSeries,
    i: usize,
    t: *mut f64,
    pair: *mut usize,
    re: *mut f64,
    im: *mut f64,
    err: *mut f64,
) -> TlStatus {
    guard(|| {
        let s = &in_ptr(series)?.0;
        let row = s.rows.get(i).ok_or_else(|| fail(Error::Range { requested: i + 1, available: s.rows.len() }))?;
        *out_ptr(t)? = row.t;
        *out_ptr(pair)? = row.pair_id;
        *out_ptr(re)? = row.value.re;
        *out_ptr(im)? = row.value.im;
        *out_ptr(err)? = row.err_est;
        Ok(())
    })
}

/// Least-squares slope of `log |K|` against `log t` for one pair.
///
/// # Safety
/// `series` must be a live handle and `slope` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tl_series_slope(series: *const TlSeries, pair: usize, slope: *mut f64) -> TlStatus {
    guard(|| {
        let out = out_ptr(slope)?;
        let s = &in_ptr(series)?.0;
        let r = fit(s, pair, &RateModel::new(vec![Basis::InvT])).map_err(fail)?;
        *out = r.slope;
        Ok(())
    })
}

/// # Safety
/// `series` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tl_series_free(series: *mut TlSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Run one oscillatory or spatial integral check.
///
/// # Safety
/// `id` must be a NUL-terminated string; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tl_verify(id: *const c_char, seed: u64, pass: *mut c_int, sup_ratio: *mut f64) -> TlStatus {
    guard(|| {
        let id = str_arg(id)?;
        let pass = out_ptr(pass)?;
        let sup = out_ptr(sup_ratio)?;
        let r = oscint::verify(id, &VerifyConfig { seed, ..VerifyConfig::default() }).map_err(fail)?;
        *pass = r.pass as c_int;
        *sup = r.measured.unwrap_or(r.sup_ratio);
        Ok(())
    })
}

/// Outgoing (`sign > 0`) or incoming four-dimensional resolvent kernel at distance `d`.
///
/// # Safety
/// Output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tl_free_kernel_4d(lambda: f64, sign: c_int, d: f64, re: *mut f64, im: *mut f64) -> TlStatus {
    guard(|| {
        let (re, im) = (out_ptr(re)?, out_ptr(im)?);
        if !(lambda > 0.0) {
            return Err(fail(Error::Domain(lambda)));
        }
        let pt = if sign >= 0 { SpectralPoint::plus(lambda) } else { SpectralPoint::minus(lambda) };
        let k = kernels::free_kernel_4d(pt, d).map_err(fail)?;
        *re = k.re;
        *im = k.im;
        Ok(())
    })
}
