use ffaba_ffi::*;
use std::ffi::{CStr, CString};
use std::ptr;

fn cx(re: f64, im: f64) -> FfabaComplex {
    FfabaComplex { re, im }
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(ffaba_last_error()) }.to_string_lossy().into_owned()
}

fn scenario(n: usize, seed: u64) -> *mut FfabaScenario {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { ffaba_scenario_new(n, cx(0.1, 0.9), 0, seed, &mut h) }, FfabaStatus::Ok);
    assert!(!h.is_null());
    h
}

#[test]
fn theta_values() {
    let mut out = cx(f64::NAN, f64::NAN);
    assert_eq!(unsafe { ffaba_theta(1, cx(0.0, 0.0), cx(0.0, 0.5), 1, 0, &mut out) }, FfabaStatus::Ok);
    assert_eq!((out.re, out.im), (0.0, 0.0));
    let (mut a, mut b) = (cx(0.0, 0.0), cx(0.0, 0.0));
    unsafe {
        ffaba_theta(1, cx(0.25, 0.0), cx(0.0, 0.5), 1, 0, &mut a);
        ffaba_theta(2, cx(-0.25, 0.0), cx(0.0, 0.5), 1, 0, &mut b);
    }
    assert!((a.re - b.re).abs() < 1e-15 && (a.im - b.im).abs() < 1e-15);
}

#[test]
fn theta_errors() {
    let mut out = cx(0.0, 0.0);
    assert_eq!(unsafe { ffaba_theta(7, cx(0.0, 0.0), cx(0.0, 0.5), 1, 0, &mut out) }, FfabaStatus::InvalidArgument);
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { ffaba_theta(1, cx(0.0, 0.0), cx(0.0, -0.5), 1, 0, &mut out) }, FfabaStatus::InvalidArgument);
    assert_eq!(unsafe { ffaba_theta(1, cx(0.0, 0.0), cx(0.0, 0.5), 1, 0, ptr::null_mut()) }, FfabaStatus::NullPointer);
}

#[test]
fn scenario_roots_and_scalar_products() {
    let h = scenario(4, 2);
    let mut n = 0usize;
    assert_eq!(unsafe { ffaba_scenario_root_count(h, &mut n) }, FfabaStatus::Ok);
    assert_eq!(n, 2);
    let mut roots = vec![cx(0.0, 0.0); n];
    assert_eq!(unsafe { ffaba_scenario_roots(h, roots.as_mut_ptr(), 1) }, FfabaStatus::BufferTooSmall);
    assert_eq!(unsafe { ffaba_scenario_roots(h, roots.as_mut_ptr(), n) }, FfabaStatus::Ok);
    // on-shell normalisation: the vector paired with itself gives 1
    let mut s = cx(0.0, 0.0);
    assert_eq!(unsafe { ffaba_scalar_product(h, 0, roots.as_ptr(), n, &mut s) }, FfabaStatus::Ok);
    assert!((s.re - 1.0).abs() < 1e-10 && s.im.abs() < 1e-10);
    let us = [cx(0.31, 0.05), cx(0.77, -0.04)];
    let (mut brute, mut closed) = (cx(0.0, 0.0), cx(0.0, 0.0));
    unsafe {
        assert_eq!(ffaba_scalar_product(h, 0, us.as_ptr(), 2, &mut brute), FfabaStatus::Ok);
        assert_eq!(ffaba_scalar_product_closed(h, 0, us.as_ptr(), 2, &mut closed), FfabaStatus::Ok);
    }
    let d = ((brute.re - closed.re).powi(2) + (brute.im - closed.im).powi(2)).sqrt();
    assert!(d < 1e-8 * brute.re.hypot(brute.im));
    assert_eq!(unsafe { ffaba_scalar_product_closed(h, 0, us.as_ptr(), 1, &mut closed) }, FfabaStatus::InvalidArgument);
    unsafe { ffaba_scenario_free(h) };
}

#[test]
fn scenario_errors() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { ffaba_scenario_new(3, cx(0.1, 0.9), 0, 1, &mut h) }, FfabaStatus::InvalidArgument);
    assert!(h.is_null());
    assert!(last_error().contains("3"));
    assert_eq!(unsafe { ffaba_scenario_new(2, cx(0.1, 0.9), 0, 1, ptr::null_mut()) }, FfabaStatus::NullPointer);
    let mut n = 0usize;
    assert_eq!(unsafe { ffaba_scenario_root_count(ptr::null(), &mut n) }, FfabaStatus::NullPointer);
    unsafe { ffaba_scenario_free(ptr::null_mut()) };
}

#[test]
fn verify_report() {
    let only = CString::new("appendix-c").unwrap();
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { ffaba_verify(ptr::null(), only.as_ptr(), &mut report) }, FfabaStatus::Ok);
    let text = unsafe { CStr::from_ptr(report) }.to_str().unwrap().to_owned();
    unsafe { ffaba_string_free(report) };
    assert_eq!(text.lines().count(), 6);
    assert!(text.lines().last().unwrap().starts_with("{\"summary\""));

    let bad = CString::new(r#"{"schema": 1, "N": [5]}"#).unwrap();
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { ffaba_verify(bad.as_ptr(), ptr::null(), &mut report) }, FfabaStatus::InvalidArgument);
    assert!(report.is_null());
    assert!(last_error().contains("N must be even"));

    let tight = CString::new(r#"{"schema": 1, "tolerances": {"theta.shift": 1e-300}}"#).unwrap();
    let only = CString::new("theta.shift").unwrap();
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { ffaba_verify(tight.as_ptr(), only.as_ptr(), &mut report) }, FfabaStatus::ChecksFailed);
    assert!(!report.is_null());
    unsafe { ffaba_string_free(report) };
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(ffaba_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
