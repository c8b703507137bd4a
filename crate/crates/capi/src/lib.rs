//! C ABI for the rce-ustat library.
//!
//! Conventions: opaque handles created and freed by this library, integer
//! status codes for every fallible call, caller-owned numeric buffers in
//! row-major order, and library-owned strings released with
//! [`rce_string_free`]. The most recent error message per thread is
//! available through [`rce_last_error_message`].

use rce_ustat::asymptotics::{test_statistic, StatName, TestParams};
use rce_ustat::decomp::{detect_principal_support, DetectPolicy};
use rce_ustat::error::Error;
use rce_ustat::graph::Catalog;
use rce_ustat::kernels::builtin;
use rce_ustat::mat::Mat;
use rce_ustat::models::{sample, DegreeFunction, ModelSpec};
use rce_ustat::ustat::{u_exact, u_fast, u_ordered};
use std::cell::RefCell;
use std::ffi::{c_char, c_double, c_int, CStr, CString};
use std::ptr;

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RceStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numeric = 3,
    Io = 4,
    Unsupported = 5,
    Internal = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(status: RceStatus, message: String) -> RceStatus {
    let cleaned = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(cleaned).unwrap_or_default();
    });
    status
}

fn status_of(err: &Error) -> RceStatus {
    match err {
        Error::Io(_) => RceStatus::Io,
        Error::CombinatorialBudget { .. } | Error::DegeneratePlugin(_) => RceStatus::Numeric,
        Error::UnknownKernel(_) | Error::NoSupportDetected { .. } => RceStatus::Unsupported,
        Error::Json(_) => RceStatus::Internal,
        _ => RceStatus::InvalidArgument,
    }
}

fn fail(err: Error) -> RceStatus {
    set_error(status_of(&err), err.to_string())
}

/// Most recent error message in this thread; owned by the library, valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rce_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version string (static storage).
#[no_mangle]
pub extern "C" fn rce_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must be a pointer previously returned by an `rce_*` call that
/// documents string ownership, and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rce_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Degree-function selector for model constructors.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RceDegree {
    Constant = 0,
    Power = 1,
}

fn degree(kind: RceDegree, exponent: c_double) -> Result<DegreeFunction, Error> {
    match kind {
        RceDegree::Constant => Ok(DegreeFunction::Constant),
        RceDegree::Power => DegreeFunction::power(exponent),
    }
}

/// Opaque model handle.
pub struct RceModel {
    spec: ModelSpec,
}

/// Creates the standard-normal i.i.d. entries model. Never fails.
#[no_mangle]
pub extern "C" fn rce_model_gaussian_iid() -> *mut RceModel {
    Box::into_raw(Box::new(RceModel {
        spec: ModelSpec::GaussianIid,
    }))
}

/// Creates a Poisson-BEDD model; `out` receives the handle.
///
/// # Safety
/// `out` must be a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn rce_model_poisson_bedd(
    lambda: c_double,
    f_kind: RceDegree,
    f_exponent: c_double,
    g_kind: RceDegree,
    g_exponent: c_double,
    out: *mut *mut RceModel,
) -> RceStatus {
    if out.is_null() {
        return set_error(RceStatus::NullPointer, "out is null".into());
    }
    let built = degree(f_kind, f_exponent)
        .and_then(|f| degree(g_kind, g_exponent).map(|g| (f, g)))
        .and_then(|(f, g)| ModelSpec::poisson_bedd(lambda, f, g));
    match built {
        Ok(spec) => {
            unsafe { *out = Box::into_raw(Box::new(RceModel { spec })) };
            RceStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Creates an overdispersed Poisson-BEDD model; `out` receives the handle.
///
/// # Safety
/// `out` must be a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn rce_model_overdispersed_poisson_bedd(
    lambda: c_double,
    f_kind: RceDegree,
    f_exponent: c_double,
    g_kind: RceDegree,
    g_exponent: c_double,
    alpha: c_double,
    out: *mut *mut RceModel,
) -> RceStatus {
    if out.is_null() {
        return set_error(RceStatus::NullPointer, "out is null".into());
    }
    let built = degree(f_kind, f_exponent)
        .and_then(|f| degree(g_kind, g_exponent).map(|g| (f, g)))
        .and_then(|(f, g)| ModelSpec::overdispersed(lambda, f, g, alpha));
    match built {
        Ok(spec) => {
            unsafe { *out = Box::into_raw(Box::new(RceModel { spec })) };
            RceStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Frees a model handle.
///
/// # Safety
/// `model` must come from an `rce_model_*` constructor and must not be used
/// after this call.
#[no_mangle]
pub unsafe extern "C" fn rce_model_free(model: *mut RceModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Samples an `m x n` matrix into the caller's row-major buffer of length
/// `m * n`. Identical `(model, m, n, seed)` always produce identical bytes.
///
/// # Safety
/// `model` must be a live handle; `out_y` must point to at least `m * n`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rce_simulate(
    model: *const RceModel,
    m: usize,
    n: usize,
    seed: u64,
    out_y: *mut c_double,
) -> RceStatus {
    if model.is_null() || out_y.is_null() {
        return set_error(RceStatus::NullPointer, "model or out_y is null".into());
    }
    match sample(&(*model).spec, m, n, seed) {
        Ok(s) => {
            ptr::copy_nonoverlapping(s.y.data().as_ptr(), out_y, m * n);
            RceStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Evaluation route for [`rce_ustat_eval`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcePath {
    Fast = 0,
    Exact = 1,
    Ordered = 2,
}

/// Evaluates the U-statistic of a built-in kernel (`"h1"`..`"h6"`) on a
/// row-major `m x n` matrix.
///
/// # Safety
/// `kernel` must be a NUL-terminated string; `y` must point to `m * n`
/// readable doubles; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rce_ustat_eval(
    kernel: *const c_char,
    y: *const c_double,
    m: usize,
    n: usize,
    path: RcePath,
    out_value: *mut c_double,
) -> RceStatus {
    if kernel.is_null() || y.is_null() || out_value.is_null() {
        return set_error(RceStatus::NullPointer, "null argument".into());
    }
    let name = match CStr::from_ptr(kernel).to_str() {
        Ok(s) => s,
        Err(_) => return set_error(RceStatus::InvalidArgument, "kernel is not UTF-8".into()),
    };
    let mat = Mat::from_vec(m, n, std::slice::from_raw_parts(y, m * n).to_vec());
    let result = match path {
        RcePath::Fast => u_fast(name, &mat),
        RcePath::Exact => builtin(name).and_then(|k| u_exact(&k, &mat)),
        RcePath::Ordered => builtin(name).and_then(|k| u_ordered(&k, &mat)),
    };
    match result {
        Ok(r) => {
            *out_value = r.value;
            RceStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Optional model parameters for [`rce_test_statistic`]. Set `has_lambda`
/// to 0 when lambda is not supplied; degree kinds apply only when their
/// `has_*` flag is nonzero.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RceTestParams {
    pub has_lambda: c_int,
    pub lambda: c_double,
    pub has_f: c_int,
    pub f_kind: RceDegree,
    pub f_exponent: c_double,
    pub has_g: c_int,
    pub g_kind: RceDegree,
    pub g_exponent: c_double,
}

/// Result of a scaled test statistic.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RceTestResult {
    pub value: c_double,
    pub variance_used: c_double,
    pub two_sided_p: c_double,
}

/// Computes `ZA`, `ZB`, `ZBprime` or `ZC` on a row-major matrix. `params`
/// may be null when the statistic needs no model parameters.
///
/// # Safety
/// Pointer arguments follow the same contracts as [`rce_ustat_eval`];
/// `params`, when non-null, must point to a valid [`RceTestParams`].
#[no_mangle]
pub unsafe extern "C" fn rce_test_statistic(
    stat: *const c_char,
    y: *const c_double,
    m: usize,
    n: usize,
    params: *const RceTestParams,
    out: *mut RceTestResult,
) -> RceStatus {
    if stat.is_null() || y.is_null() || out.is_null() {
        return set_error(RceStatus::NullPointer, "null argument".into());
    }
    let name: StatName = match CStr::from_ptr(stat).to_str() {
        Ok(s) => match s.parse() {
            Ok(name) => name,
            Err(e) => return fail(e),
        },
        Err(_) => return set_error(RceStatus::InvalidArgument, "stat is not UTF-8".into()),
    };
    let mut tp = TestParams::default();
    if !params.is_null() {
        let p = &*params;
        if p.has_lambda != 0 {
            tp.lambda = Some(p.lambda);
        }
        if p.has_f != 0 {
            tp.f = match degree(p.f_kind, p.f_exponent) {
                Ok(d) => Some(d),
                Err(e) => return fail(e),
            };
        }
        if p.has_g != 0 {
            tp.g = match degree(p.g_kind, p.g_exponent) {
                Ok(d) => Some(d),
                Err(e) => return fail(e),
            };
        }
    }
    let mat = Mat::from_vec(m, n, std::slice::from_raw_parts(y, m * n).to_vec());
    match test_statistic(name, &mat, &tp) {
        Ok(t) => {
            *out = RceTestResult {
                value: t.value,
                variance_used: t.variance_used,
                two_sided_p: t.two_sided_p,
            };
            RceStatus::Ok
        }
        Err(e) => fail(e),
    }
}

fn string_out(out: *mut *mut c_char, text: String) -> RceStatus {
    match CString::new(text) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            RceStatus::Ok
        }
        Err(_) => set_error(RceStatus::Internal, "string contains NUL".into()),
    }
}

/// Serializes the graph-class catalogs up to `(max_rows, max_cols)` as a
/// JSON array; the string is library-owned, release with [`rce_string_free`].
///
/// # Safety
/// `out_json` must be a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn rce_catalog_json(
    max_rows: usize,
    max_cols: usize,
    out_json: *mut *mut c_char,
) -> RceStatus {
    if out_json.is_null() {
        return set_error(RceStatus::NullPointer, "out_json is null".into());
    }
    let catalog = match Catalog::build(max_rows, max_cols) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let mut classes = Vec::new();
    for r in 0..=max_rows {
        for c in 0..=max_cols {
            classes.extend(catalog.gamma(r, c).iter().cloned());
        }
    }
    match serde_json::to_string_pretty(&classes) {
        Ok(text) => string_out(out_json, text),
        Err(e) => set_error(RceStatus::Internal, e.to_string()),
    }
}

/// Runs principal-support detection and serializes the report as JSON; the
/// string is library-owned, release with [`rce_string_free`].
///
/// # Safety
/// `model` must be a live handle; `kernel` a NUL-terminated string;
/// `out_json` a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn rce_support_json(
    model: *const RceModel,
    kernel: *const c_char,
    significance: c_double,
    pilot: usize,
    seed: u64,
    out_json: *mut *mut c_char,
) -> RceStatus {
    if model.is_null() || kernel.is_null() || out_json.is_null() {
        return set_error(RceStatus::NullPointer, "null argument".into());
    }
    let name = match CStr::from_ptr(kernel).to_str() {
        Ok(s) => s,
        Err(_) => return set_error(RceStatus::InvalidArgument, "kernel is not UTF-8".into()),
    };
    let k = match builtin(name) {
        Ok(k) => k,
        Err(e) => return fail(e),
    };
    let policy = DetectPolicy {
        pilot,
        significance,
        seed,
        ..Default::default()
    };
    match detect_principal_support(&(*model).spec, &k, &policy) {
        Ok(report) => match serde_json::to_string_pretty(&report) {
            Ok(text) => string_out(out_json, text),
            Err(e) => set_error(RceStatus::Internal, e.to_string()),
        },
        Err(e) => fail(e),
    }
}
