use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use ltqkd_ffi::*;

const CONFIG: &str =
    "loss_start = 0\nloss_stop = 30\nloss_step = 10\ndelta = 0.063\nepsilon = 1e-6\n";

fn parse(text: &str) -> (LtqkdStatus, *mut LtqkdConfig) {
    let c = CString::new(text).unwrap();
    let mut h = ptr::null_mut();
    let s = unsafe { ltqkd_config_parse(c.as_ptr(), &mut h) };
    (s, h)
}

fn last_error() -> String {
    let p = ltqkd_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn scan_through_handles_matches_library() {
    let (s, cfg) = parse(CONFIG);
    assert_eq!(s, LtqkdStatus::Ok);
    let mut scan = ptr::null_mut();
    assert_eq!(unsafe { ltqkd_scan_run(cfg, &mut scan) }, LtqkdStatus::Ok);
    let n = unsafe { ltqkd_scan_len(scan) };
    assert_eq!(n, 4);

    let direct = ltqkd::keyrate::scan(&ltqkd::cli::parse_config(CONFIG).unwrap());
    for (i, want) in direct.iter().enumerate() {
        let mut p = std::mem::MaybeUninit::<LtqkdPoint>::uninit();
        assert_eq!(
            unsafe { ltqkd_scan_get(scan, i, p.as_mut_ptr()) },
            LtqkdStatus::Ok
        );
        let p = unsafe { p.assume_init() };
        assert_eq!(p.loss_db, want.loss_db);
        assert_eq!(p.e_x, want.e_x);
        assert_eq!(p.rate, want.rate);
        assert_eq!(p.status, LtqkdPointStatus::Ok);

        let mut single = std::mem::MaybeUninit::<LtqkdPoint>::uninit();
        assert_eq!(
            unsafe { ltqkd_evaluate_point(cfg, want.loss_db, single.as_mut_ptr()) },
            LtqkdStatus::Ok
        );
        assert_eq!(unsafe { single.assume_init() }.rate, want.rate);
    }

    let mut p = std::mem::MaybeUninit::<LtqkdPoint>::uninit();
    assert_eq!(
        unsafe { ltqkd_scan_get(scan, n, p.as_mut_ptr()) },
        LtqkdStatus::Index
    );

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rates.csv");
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    assert_eq!(
        unsafe { ltqkd_scan_write_csv(scan, cpath.as_ptr()) },
        LtqkdStatus::Ok
    );
    assert_eq!(
        std::fs::read_to_string(&path).unwrap(),
        ltqkd::cli::format_csv(&direct)
    );
    let bad = CString::new(dir.path().join("missing/x.csv").to_str().unwrap()).unwrap();
    assert_eq!(
        unsafe { ltqkd_scan_write_csv(scan, bad.as_ptr()) },
        LtqkdStatus::Io
    );

    unsafe {
        ltqkd_scan_free(scan);
        ltqkd_config_free(cfg);
    }
}

#[test]
fn config_errors_are_reported() {
    let (s, h) = parse("loss_start = 0\nwhat = 1\n");
    assert_eq!(s, LtqkdStatus::Config);
    assert!(h.is_null());
    assert!(last_error().contains("what"));

    let (s, h) = parse(&format!("{CONFIG}epsilon = 1.5\n"));
    assert_ne!(s, LtqkdStatus::Ok);
    assert!(h.is_null());

    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { ltqkd_config_parse(ptr::null(), &mut h) },
        LtqkdStatus::NullPointer
    );
    let bytes = [0xffu8, 0xfe, 0];
    assert_eq!(
        unsafe { ltqkd_config_parse(bytes.as_ptr().cast(), &mut h) },
        LtqkdStatus::InvalidUtf8
    );
}

#[test]
fn config_text_round_trips() {
    let (_, cfg) = parse(CONFIG);
    let mut text = ptr::null_mut();
    assert_eq!(
        unsafe { ltqkd_config_to_string(cfg, &mut text) },
        LtqkdStatus::Ok
    );
    let s = unsafe { CStr::from_ptr(text) }.to_str().unwrap().to_owned();
    let (st, again) = parse(&s);
    assert_eq!(st, LtqkdStatus::Ok);
    unsafe {
        assert_eq!(
            ltqkd::cli::parse_config(&s).unwrap(),
            ltqkd::cli::parse_config(CONFIG).unwrap()
        );
        ltqkd_string_free(text);
        ltqkd_config_free(cfg);
        ltqkd_config_free(again);
    }
}

#[test]
fn scalar_functions() {
    let mut out = 0.0;
    assert_eq!(
        unsafe { ltqkd_binary_entropy(0.11, &mut out) },
        LtqkdStatus::Ok
    );
    assert!((out - 0.499_915_958_164_528_3).abs() < 1e-15);
    assert_eq!(
        unsafe { ltqkd_binary_entropy(1.5, &mut out) },
        LtqkdStatus::OutOfRange
    );
    assert_eq!(
        unsafe { ltqkd_binary_entropy(0.5, ptr::null_mut()) },
        LtqkdStatus::NullPointer
    );

    assert_eq!(
        unsafe { ltqkd_secret_key_rate(0.05, 0.0, 0.0, 1.16, &mut out) },
        LtqkdStatus::Ok
    );
    assert_eq!(out, 0.05);
    assert_eq!(
        unsafe { ltqkd_secret_key_rate(0.05, 0.1, 0.01, 0.5, &mut out) },
        LtqkdStatus::OutOfRange
    );
    assert!(last_error().contains("efficiency"));
}

#[test]
fn null_handles_are_harmless() {
    unsafe {
        ltqkd_config_free(ptr::null_mut());
        ltqkd_scan_free(ptr::null_mut());
        ltqkd_string_free(ptr::null_mut());
        assert_eq!(ltqkd_scan_len(ptr::null()), 0);
        let mut s = ptr::null_mut();
        assert_eq!(
            ltqkd_scan_run(ptr::null(), &mut s),
            LtqkdStatus::NullPointer
        );
    }
}

fn target_dir() -> PathBuf {
    // <target>/<profile>/deps/<test-binary>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_header() {
    let header_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let lib = target_dir().join("libltqkd_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include <string.h>
#include "ltqkd.h"

int main(void) {
    LtqkdConfig *cfg = NULL;
    const char *text = "loss_start = 0\nloss_stop = 20\nloss_step = 10\nepsilon = 1e-6\n";
    if (ltqkd_config_parse(text, &cfg) != LTQKD_STATUS_OK) return 10;
    LtqkdScan *scan = NULL;
    if (ltqkd_scan_run(cfg, &scan) != LTQKD_STATUS_OK) return 11;
    if (ltqkd_scan_len(scan) != 3) return 12;
    LtqkdPoint p;
    if (ltqkd_scan_get(scan, 1, &p) != LTQKD_STATUS_OK) return 13;
    if (p.loss_db != 10.0 || !(p.rate > 0.0) || p.status != LTQKD_POINT_STATUS_OK) return 14;
    LtqkdConfig *bad = NULL;
    if (ltqkd_config_parse("nonsense", &bad) != LTQKD_STATUS_CONFIG || bad) return 15;
    if (strlen(ltqkd_last_error_message()) == 0) return 16;
    double h = 0.0;
    if (ltqkd_binary_entropy(0.5, &h) != LTQKD_STATUS_OK || h != 1.0) return 17;
    ltqkd_scan_free(scan);
    ltqkd_config_free(cfg);
    printf("%.17g\n", p.rate);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("demo");
    let cc = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&header_dir)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .expect("C compiler available");
    assert!(
        cc.status.success(),
        "{}",
        String::from_utf8_lossy(&cc.stderr)
    );
    let run = Command::new(&exe).output().unwrap();
    assert_eq!(run.status.code(), Some(0));
    let rate: f64 = String::from_utf8_lossy(&run.stdout).trim().parse().unwrap();
    assert!(rate > 0.0);
}
