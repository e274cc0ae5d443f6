//! C ABI over the `ltqkd` engine.
//!
//! Configurations and scan results are opaque handles owned by the caller
//! and released with the matching `*_free`. Every fallible call returns an
//! `LtqkdStatus`; on failure `ltqkd_last_error_message` describes the most
//! recent error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ltqkd::cli::{format_csv, parse_config, ScanConfig};
use ltqkd::keyrate::{self, KeyRatePoint, PointStatus};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LtqkdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    OutOfRange = 4,
    Numerical = 5,
    Io = 6,
    Index = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LtqkdPointStatus {
    Ok = 0,
    NoKey = 1,
    Inconclusive = 2,
    Error = 3,
}

/// One scan row. Fields mirror the CSV columns.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LtqkdPoint {
    pub loss_db: f64,
    pub eta: f64,
    pub e_x: f64,
    pub e_z: f64,
    pub y_z: f64,
    pub rate: f64,
    pub w_max: f64,
    pub d0x: f64,
    pub status: LtqkdPointStatus,
}

pub struct LtqkdConfig(ScanConfig);

pub struct LtqkdScan(Vec<KeyRatePoint>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let mut msg = msg.into();
    msg.retain(|c| c != '\0');
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: LtqkdStatus, msg: impl Into<String>) -> LtqkdStatus {
    set_error(msg);
    status
}

fn status_of(err: &ltqkd::Error) -> LtqkdStatus {
    use ltqkd::Error as E;
    match err {
        E::Config { .. } => LtqkdStatus::Config,
        E::OutOfRange { .. } | E::DimensionMismatch { .. } | E::MissingSetting(_) => {
            LtqkdStatus::OutOfRange
        }
        _ => LtqkdStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> LtqkdStatus) -> LtqkdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(LtqkdStatus::Panic, "internal panic"),
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, LtqkdStatus> {
    if p.is_null() {
        return Err(fail(LtqkdStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(LtqkdStatus::InvalidUtf8, "string is not UTF-8"))
}

impl From<&KeyRatePoint> for LtqkdPoint {
    fn from(p: &KeyRatePoint) -> Self {
        LtqkdPoint {
            loss_db: p.loss_db,
            eta: p.eta,
            e_x: p.e_x,
            e_z: p.e_z,
            y_z: p.y_z,
            rate: p.rate,
            w_max: p.w_max,
            d0x: p.d0x,
            status: match p.status {
                PointStatus::Ok => LtqkdPointStatus::Ok,
                PointStatus::NoKey => LtqkdPointStatus::NoKey,
                PointStatus::Inconclusive(_) => LtqkdPointStatus::Inconclusive,
                PointStatus::Error(_) => LtqkdPointStatus::Error,
            },
        }
    }
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ltqkd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parse a scan configuration in the `key = value` text format.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ltqkd_config_parse(
    text: *const c_char,
    out: *mut *mut LtqkdConfig,
) -> LtqkdStatus {
    guard(|| {
        if out.is_null() {
            return fail(LtqkdStatus::NullPointer, "null output handle");
        }
        *out = ptr::null_mut();
        let text = match read_str(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match parse_config(text) {
            Ok(cfg) => {
                *out = Box::into_raw(Box::new(LtqkdConfig(cfg)));
                LtqkdStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `config` must come from `ltqkd_config_parse` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ltqkd_config_free(config: *mut LtqkdConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Serialise a configuration back to text. Free the result with
/// `ltqkd_string_free`.
///
/// # Safety
/// `config` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ltqkd_config_to_string(
    config: *const LtqkdConfig,
    out: *mut *mut c_char,
) -> LtqkdStatus {
    guard(|| {
        if config.is_null() || out.is_null() {
            return fail(LtqkdStatus::NullPointer, "null argument");
        }
        match CString::new((&*config).0.to_config_string()) {
            Ok(s) => {
                *out = s.into_raw();
                LtqkdStatus::Ok
            }
            Err(_) => fail(LtqkdStatus::InvalidUtf8, "embedded NUL"),
        }
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ltqkd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Evaluate a single loss value with the settings in `config`.
///
/// # Safety
/// `config` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ltqkd_evaluate_point(
    config: *const LtqkdConfig,
    loss_db: f64,
    out: *mut LtqkdPoint,
) -> LtqkdStatus {
    guard(|| {
        if config.is_null() || out.is_null() {
            return fail(LtqkdStatus::NullPointer, "null argument");
        }
        match keyrate::evaluate_point(&(&*config).0, loss_db) {
            Ok(p) => {
                *out = LtqkdPoint::from(&p);
                LtqkdStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Run the loss scan described by `config`.
///
/// # Safety
/// `config` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ltqkd_scan_run(
    config: *const LtqkdConfig,
    out: *mut *mut LtqkdScan,
) -> LtqkdStatus {
    guard(|| {
        if config.is_null() || out.is_null() {
            return fail(LtqkdStatus::NullPointer, "null argument");
        }
        *out = ptr::null_mut();
        let cfg = &(&*config).0;
        if let Err(e) = cfg.validate() {
            return fail(status_of(&e), e.to_string());
        }
        *out = Box::into_raw(Box::new(LtqkdScan(keyrate::scan(cfg))));
        LtqkdStatus::Ok
    })
}

/// Number of rows in a scan; 0 for a null handle.
///
/// # Safety
/// `scan` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ltqkd_scan_len(scan: *const LtqkdScan) -> usize {
    if scan.is_null() {
        0
    } else {
        (&*scan).0.len()
    }
}

/// # Safety
/// `scan` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ltqkd_scan_get(
    scan: *const LtqkdScan,
    index: usize,
    out: *mut LtqkdPoint,
) -> LtqkdStatus {
    guard(|| {
        if scan.is_null() || out.is_null() {
            return fail(LtqkdStatus::NullPointer, "null argument");
        }
        match (&*scan).0.get(index) {
            Some(p) => {
                *out = LtqkdPoint::from(p);
                LtqkdStatus::Ok
            }
            None => fail(LtqkdStatus::Index, format!("row {index} out of range")),
        }
    })
}

/// Write the scan as CSV to `path`.
///
/// # Safety
/// `scan` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ltqkd_scan_write_csv(
    scan: *const LtqkdScan,
    path: *const c_char,
) -> LtqkdStatus {
    guard(|| {
        if scan.is_null() {
            return fail(LtqkdStatus::NullPointer, "null scan");
        }
        let path = match read_str(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match std::fs::write(path, format_csv(&(&*scan).0)) {
            Ok(()) => LtqkdStatus::Ok,
            Err(e) => fail(LtqkdStatus::Io, format!("{path}: {e}")),
        }
    })
}

/// # Safety
/// `scan` must come from `ltqkd_scan_run` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ltqkd_scan_free(scan: *mut LtqkdScan) {
    if !scan.is_null() {
        drop(Box::from_raw(scan));
    }
}

/// Binary entropy in bits.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ltqkd_binary_entropy(x: f64, out: *mut f64) -> LtqkdStatus {
    guard(|| {
        if out.is_null() {
            return fail(LtqkdStatus::NullPointer, "null output");
        }
        match keyrate::binary_entropy(x) {
            Ok(h) => {
                *out = h;
                LtqkdStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// `max(0, y_z (1 - h(e_x) - f h(e_z)))`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ltqkd_secret_key_rate(
    y_z: f64,
    e_x: f64,
    e_z: f64,
    f: f64,
    out: *mut f64,
) -> LtqkdStatus {
    guard(|| {
        if out.is_null() {
            return fail(LtqkdStatus::NullPointer, "null output");
        }
        match keyrate::secret_key_rate(y_z, e_x, e_z, f) {
            Ok(r) => {
                *out = r;
                LtqkdStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}
