//! C ABI for ffaba.
//!
//! Every function returns an [`FfabaStatus`]. On failure a message is kept
//! per thread and can be read with [`ffaba_last_error`]. Panics never cross
//! the boundary; they surface as `FFABA_STATUS_PANIC`.

use ffaba::harness::config::RunConfig;
use ffaba::harness::{run_checks, RunOptions, Suite};
use ffaba::sampling::Scenario;
use ffaba::theta::ModularContext;
use ffaba::C64;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FfabaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    BufferTooSmall = 4,
    ChecksFailed = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FfabaComplex {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for FfabaComplex {
    fn from(z: C64) -> Self {
        FfabaComplex { re: z.re, im: z.im }
    }
}

impl From<FfabaComplex> for C64 {
    fn from(z: FfabaComplex) -> Self {
        C64::new(z.re, z.im)
    }
}

/// Opaque: a chain, a gauge, solved Bethe roots and the on-shell dual vector.
pub struct FfabaScenario {
    inner: Scenario,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

type Outcome = Result<(), (FfabaStatus, String)>;

fn guard(f: impl FnOnce() -> Outcome) -> FfabaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FfabaStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside ffaba");
            FfabaStatus::Panic
        }
    }
}

fn invalid(e: impl ToString) -> (FfabaStatus, String) {
    (FfabaStatus::InvalidArgument, e.to_string())
}

fn numerical(e: impl ToString) -> (FfabaStatus, String) {
    (FfabaStatus::Numerical, e.to_string())
}

fn null(what: &str) -> (FfabaStatus, String) {
    (FfabaStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `ptr` must be null or valid for a write of `T`.
unsafe fn write<T>(ptr: *mut T, value: T, what: &str) -> Outcome {
    match unsafe { ptr.as_mut() } {
        Some(slot) => {
            *slot = value;
            Ok(())
        }
        None => Err(null(what)),
    }
}

/// # Safety
/// `ptr` must be null or point to `len` readable values.
unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], (FfabaStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(unsafe { std::slice::from_raw_parts(ptr, len) })
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ffaba_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread; empty if none. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ffaba_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// θ_kind(u | scale·τ), or its u-derivative when `derivative` is nonzero.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ffaba_theta(kind: u8, u: FfabaComplex, tau: FfabaComplex, scale: u8, derivative: i32, out: *mut FfabaComplex) -> FfabaStatus {
    guard(|| {
        let ctx = ModularContext::new(tau.into()).map_err(invalid)?;
        let value = if derivative != 0 { ctx.eval_theta_derivative(kind, u.into(), scale) } else { ctx.eval_theta(kind, u.into(), scale) }.map_err(invalid)?;
        unsafe { write(out, value.into(), "out") }
    })
}

/// Builds a seeded scenario with `n_sites` sites in sector `nu` at modulus `tau`.
/// Free the handle with [`ffaba_scenario_free`].
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ffaba_scenario_new(n_sites: usize, tau: FfabaComplex, nu: i64, seed: u64, out: *mut *mut FfabaScenario) -> FfabaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = Scenario::random(n_sites, tau.into(), nu, seed).map_err(|e| match e {
            ffaba::sampling::SampleError::Vertex(v) => invalid(v),
            ffaba::sampling::SampleError::Theta(t) => invalid(t),
            other => numerical(other),
        })?;
        let handle = Box::into_raw(Box::new(FfabaScenario { inner }));
        unsafe { write(out, handle, "out") }
    })
}

/// # Safety
/// `handle` must be null or come from [`ffaba_scenario_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ffaba_scenario_free(handle: *mut FfabaScenario) {
    if !handle.is_null() {
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// Number of twin-free on-shell roots (N/2).
///
/// # Safety
/// `handle` must be a live scenario and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ffaba_scenario_root_count(handle: *const FfabaScenario, out: *mut usize) -> FfabaStatus {
    guard(|| {
        let sc = unsafe { handle.as_ref() }.ok_or_else(|| null("handle"))?;
        unsafe { write(out, sc.inner.roots.selected.len(), "out") }
    })
}

/// Copies the twin-free roots into `out[0..len]`.
///
/// # Safety
/// `handle` must be a live scenario and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn ffaba_scenario_roots(handle: *const FfabaScenario, out: *mut FfabaComplex, len: usize) -> FfabaStatus {
    guard(|| {
        let sc = unsafe { handle.as_ref() }.ok_or_else(|| null("handle"))?;
        let roots = &sc.inner.roots.selected;
        if len < roots.len() {
            return Err((FfabaStatus::BufferTooSmall, format!("need {} entries, got {len}", roots.len())));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let dst = unsafe { std::slice::from_raw_parts_mut(out, roots.len()) };
        for (d, &r) in dst.iter_mut().zip(roots) {
            *d = r.into();
        }
        Ok(())
    })
}

/// Normalised scalar product of the on-shell dual vector with the sector-λ
/// Bethe vector at `us`, by brute force.
///
/// # Safety
/// `handle` must be a live scenario, `us` valid for `m` reads and `out` for a write.
#[no_mangle]
pub unsafe extern "C" fn ffaba_scalar_product(
    handle: *const FfabaScenario,
    lambda: i64,
    us: *const FfabaComplex,
    m: usize,
    out: *mut FfabaComplex,
) -> FfabaStatus {
    guard(|| {
        let sc = unsafe { handle.as_ref() }.ok_or_else(|| null("handle"))?;
        let us: Vec<C64> = unsafe { slice(us, m, "us") }?.iter().map(|&z| z.into()).collect();
        let v = sc.inner.on_shell.brute_force_sp(lambda, &us).map_err(numerical)?;
        unsafe { write(out, v.into(), "out") }
    })
}

/// The balanced closed form for sector λ; needs `m` = N/2.
///
/// # Safety
/// As for [`ffaba_scalar_product`].
#[no_mangle]
pub unsafe extern "C" fn ffaba_scalar_product_closed(
    handle: *const FfabaScenario,
    lambda: i64,
    us: *const FfabaComplex,
    m: usize,
    out: *mut FfabaComplex,
) -> FfabaStatus {
    guard(|| {
        let sc = unsafe { handle.as_ref() }.ok_or_else(|| null("handle"))?;
        let us: Vec<C64> = unsafe { slice(us, m, "us") }?.iter().map(|&z| z.into()).collect();
        let v = sc.inner.on_shell.balanced_closed_form(lambda, &us).map_err(|e| match e {
            ffaba::scalar::ScalarError::Cardinality { .. } => invalid(e),
            other => numerical(other),
        })?;
        unsafe { write(out, v.into(), "out") }
    })
}

/// Runs the verification suite for a JSON configuration (NULL for defaults),
/// optionally restricted to ids containing `only`. The JSON-lines report is
/// returned through `report` and must be freed with [`ffaba_string_free`].
/// Returns `FFABA_STATUS_CHECKS_FAILED` if any check failed or errored; the
/// report is still written.
///
/// # Safety
/// `config` and `only` must be null or NUL-terminated; `report` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn ffaba_verify(config: *const c_char, only: *const c_char, report: *mut *mut c_char) -> FfabaStatus {
    guard(|| {
        if report.is_null() {
            return Err(null("report"));
        }
        let text = |p: *const c_char| -> Result<Option<String>, (FfabaStatus, String)> {
            if p.is_null() {
                return Ok(None);
            }
            unsafe { CStr::from_ptr(p) }.to_str().map(|s| Some(s.to_owned())).map_err(invalid)
        };
        let cfg = match text(config)? {
            Some(json) => RunConfig::from_json(&json).map_err(invalid)?,
            None => RunConfig::default(),
        };
        let opts = RunOptions { only: text(only)?, ..RunOptions::default() };
        let r = run_checks(&cfg, &cfg.sizes, Suite::Verify, &opts);
        let body = CString::new(r.to_jsonl()).map_err(invalid)?;
        unsafe { write(report, body.into_raw(), "report") }?;
        if r.summary.failed + r.summary.errors > 0 {
            return Err((FfabaStatus::ChecksFailed, format!("{} failed, {} errors", r.summary.failed, r.summary.errors)));
        }
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn ffaba_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}
