//! C ABI over the osmeter numeric kernels so other languages can bind the
//! agreement statistics, choice-model estimation, distribution functions,
//! and URL classification without the Rust toolchain.
//!
//! Conventions: functions return [`OsmStatus`]; results come back through
//! out-pointers; fitted models are opaque handles freed with their matching
//! `_free` function. Strings are NUL-terminated UTF-8; callers own their
//! buffers.

use std::ffi::{c_char, CStr};
use std::ptr;

use osmeter::agreement;
use osmeter::links;
use osmeter::model;
use osmeter::stats::special;
use osmeter::stats::welch::{welch_t_test, SampleSummary};

/// Status codes for every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OsmStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    ComputationFailed = 3,
    BufferTooSmall = 4,
    InvalidUtf8 = 5,
}

/// Host categories mirrored as a C enum.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OsmHostCategory {
    CodeHost = 0,
    OpenRepoDoi = 1,
    GovOpenData = 2,
    UniversityRepo = 3,
    BenchmarkHub = 4,
    NgoNonprofit = 5,
    OtherWeb = 6,
}

fn copy_str(value: &str, buf: *mut c_char, buf_len: usize) -> OsmStatus {
    if buf.is_null() {
        return OsmStatus::NullArgument;
    }
    let bytes = value.as_bytes();
    if bytes.len() + 1 > buf_len {
        return OsmStatus::BufferTooSmall;
    }
    unsafe {
        ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, bytes.len());
        *buf.add(bytes.len()) = 0;
    }
    OsmStatus::Ok
}

unsafe fn cstr<'a>(s: *const c_char) -> Result<&'a str, OsmStatus> {
    if s.is_null() {
        return Err(OsmStatus::NullArgument);
    }
    CStr::from_ptr(s).to_str().map_err(|_| OsmStatus::InvalidUtf8)
}

unsafe fn bool_slice(ptr: *const u8, len: usize) -> Result<Vec<bool>, OsmStatus> {
    if ptr.is_null() {
        return Err(OsmStatus::NullArgument);
    }
    let raw = std::slice::from_raw_parts(ptr, len);
    Ok(raw.iter().map(|&v| v != 0).collect())
}

/// Adjusted likelihood ratio index 1 - (L_final - K) / L_null.
/// Requires L_null < 0; returns NaN otherwise.
#[no_mangle]
pub extern "C" fn osm_adjusted_rho2(loglik_final: f64, loglik_null: f64, k: usize) -> f64 {
    if loglik_null >= 0.0 {
        return f64::NAN;
    }
    model::adjusted_rho2(loglik_final, loglik_null, k)
}

/// Chi-square survival function; NaN on a non-positive df.
#[no_mangle]
pub extern "C" fn osm_chi2_sf(x: f64, df: f64) -> f64 {
    if df <= 0.0 {
        return f64::NAN;
    }
    special::chi2_sf(x, df)
}

/// Standard normal survival function.
#[no_mangle]
pub extern "C" fn osm_normal_sf(z: f64) -> f64 {
    special::normal_sf(z)
}

/// Cohen's kappa between two boolean label columns (0/1 bytes).
///
/// # Safety
/// `a` and `b` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn osm_cohen_kappa(
    a: *const u8,
    b: *const u8,
    len: usize,
    out: *mut f64,
) -> OsmStatus {
    if out.is_null() {
        return OsmStatus::NullArgument;
    }
    let (a, b) = match (bool_slice(a, len), bool_slice(b, len)) {
        (Ok(a), Ok(b)) => (a, b),
        _ => return OsmStatus::NullArgument,
    };
    match agreement::cohen_kappa(&a, &b) {
        Ok(k) => {
            *out = k.value;
            OsmStatus::Ok
        }
        Err(_) => OsmStatus::InvalidArgument,
    }
}

/// Fleiss's kappa over an item-major boolean grid (n_items x n_raters).
///
/// # Safety
/// `labels` must point to `n_items * n_raters` readable bytes.
#[no_mangle]
pub unsafe extern "C" fn osm_fleiss_kappa(
    labels: *const u8,
    n_items: usize,
    n_raters: usize,
    out: *mut f64,
) -> OsmStatus {
    if out.is_null() {
        return OsmStatus::NullArgument;
    }
    let flat = match bool_slice(labels, n_items.saturating_mul(n_raters)) {
        Ok(v) => v,
        Err(s) => return s,
    };
    let grid: Vec<Vec<bool>> = flat.chunks(n_raters.max(1)).map(|c| c.to_vec()).collect();
    let items = (0..n_items).map(|i| format!("i{i}")).collect();
    let raters = (0..n_raters).map(|r| format!("r{r}")).collect();
    let matrix = match agreement::LabelMatrix::new(items, raters, grid) {
        Ok(m) => m,
        Err(_) => return OsmStatus::InvalidArgument,
    };
    match agreement::fleiss_kappa(&matrix) {
        Ok(k) => {
            *out = k.value;
            OsmStatus::Ok
        }
        Err(_) => OsmStatus::InvalidArgument,
    }
}

/// Overall percentage agreement (all raters match) over the same grid shape
/// as [`osm_fleiss_kappa`].
///
/// # Safety
/// `labels` must point to `n_items * n_raters` readable bytes.
#[no_mangle]
pub unsafe extern "C" fn osm_percentage_agreement(
    labels: *const u8,
    n_items: usize,
    n_raters: usize,
    out: *mut f64,
) -> OsmStatus {
    if out.is_null() {
        return OsmStatus::NullArgument;
    }
    let flat = match bool_slice(labels, n_items.saturating_mul(n_raters)) {
        Ok(v) => v,
        Err(s) => return s,
    };
    let grid: Vec<Vec<bool>> = flat.chunks(n_raters.max(1)).map(|c| c.to_vec()).collect();
    let items = (0..n_items).map(|i| format!("i{i}")).collect();
    let raters = (0..n_raters).map(|r| format!("r{r}")).collect();
    let matrix = match agreement::LabelMatrix::new(items, raters, grid) {
        Ok(m) => m,
        Err(_) => return OsmStatus::InvalidArgument,
    };
    match agreement::percentage_agreement(&matrix) {
        Ok((pa, _)) => {
            *out = pa;
            OsmStatus::Ok
        }
        Err(_) => OsmStatus::InvalidArgument,
    }
}

/// Landis-Koch band label for a kappa value, NUL-terminated.
///
/// # Safety
/// `buf` must be writable for `buf_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn osm_kappa_band(
    kappa: f64,
    buf: *mut c_char,
    buf_len: usize,
) -> OsmStatus {
    copy_str(&agreement::band(kappa).to_string(), buf, buf_len)
}

/// Welch's t-test from group summaries; outputs t, two-sided p, and the 95%
/// CI bounds of mean_a - mean_b.
///
/// # Safety
/// All out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn osm_welch_t_test(
    mean_a: f64,
    sd_a: f64,
    n_a: usize,
    mean_b: f64,
    sd_b: f64,
    n_b: usize,
    t_out: *mut f64,
    p_out: *mut f64,
    ci_lo_out: *mut f64,
    ci_hi_out: *mut f64,
) -> OsmStatus {
    if t_out.is_null() || p_out.is_null() || ci_lo_out.is_null() || ci_hi_out.is_null() {
        return OsmStatus::NullArgument;
    }
    match welch_t_test(
        &SampleSummary::new(mean_a, sd_a, n_a),
        &SampleSummary::new(mean_b, sd_b, n_b),
    ) {
        Ok(r) => {
            *t_out = r.t;
            *p_out = r.p;
            *ci_lo_out = r.ci95.0;
            *ci_hi_out = r.ci95.1;
            OsmStatus::Ok
        }
        Err(_) => OsmStatus::InvalidArgument,
    }
}

/// Canonical form of a URL, NUL-terminated.
///
/// # Safety
/// `url` must be a NUL-terminated string; `buf` writable for `buf_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn osm_canonize_url(
    url: *const c_char,
    buf: *mut c_char,
    buf_len: usize,
) -> OsmStatus {
    let url = match cstr(url) {
        Ok(u) => u,
        Err(s) => return s,
    };
    copy_str(&links::canonize_url(url).url, buf, buf_len)
}

/// Host category of a canonical URL.
///
/// # Safety
/// `url` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn osm_classify_host(
    url: *const c_char,
    out: *mut OsmHostCategory,
) -> OsmStatus {
    if out.is_null() {
        return OsmStatus::NullArgument;
    }
    let url = match cstr(url) {
        Ok(u) => u,
        Err(s) => return s,
    };
    *out = match links::classify_host(url) {
        links::HostCategory::CodeHost => OsmHostCategory::CodeHost,
        links::HostCategory::OpenRepoDoi => OsmHostCategory::OpenRepoDoi,
        links::HostCategory::GovOpenData => OsmHostCategory::GovOpenData,
        links::HostCategory::UniversityRepo => OsmHostCategory::UniversityRepo,
        links::HostCategory::BenchmarkHub => OsmHostCategory::BenchmarkHub,
        links::HostCategory::NgoNonprofit => OsmHostCategory::NgoNonprofit,
        links::HostCategory::OtherWeb => OsmHostCategory::OtherWeb,
    };
    OsmStatus::Ok
}

/// Opaque handle to a fitted binary logit model.
pub struct OsmLogitFit {
    inner: model::ChoiceModelResult,
}

/// Fit a binary logit by maximum likelihood.
///
/// `design` is row-major n_obs x n_cols with the intercept as the first
/// column; `outcome` holds 0/1 bytes. On success `*out` owns the fit and
/// must be released with [`osm_logit_fit_free`].
///
/// # Safety
/// `design` must point to `n_obs * n_cols` doubles, `outcome` to `n_obs`
/// bytes, `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn osm_logit_fit(
    design: *const f64,
    n_obs: usize,
    n_cols: usize,
    outcome: *const u8,
    out: *mut *mut OsmLogitFit,
) -> OsmStatus {
    if design.is_null() || out.is_null() {
        return OsmStatus::NullArgument;
    }
    if n_obs == 0 || n_cols == 0 {
        return OsmStatus::InvalidArgument;
    }
    let y = match bool_slice(outcome, n_obs) {
        Ok(y) => y,
        Err(s) => return s,
    };
    let flat = std::slice::from_raw_parts(design, n_obs * n_cols);
    let rows: Vec<Vec<f64>> = flat.chunks(n_cols).map(|c| c.to_vec()).collect();
    let columns: Vec<String> = (0..n_cols)
        .map(|i| if i == 0 { "const".to_string() } else { format!("x{i}") })
        .collect();
    match model::fit_binary_logit(&rows, &columns, &y) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(OsmLogitFit { inner }));
            OsmStatus::Ok
        }
        Err(_) => OsmStatus::ComputationFailed,
    }
}

/// Number of fitted parameters.
///
/// # Safety
/// `fit` must be a live handle from [`osm_logit_fit`].
#[no_mangle]
pub unsafe extern "C" fn osm_logit_n_params(fit: *const OsmLogitFit) -> usize {
    if fit.is_null() {
        return 0;
    }
    (*fit).inner.coefficients.len()
}

unsafe fn logit_field(
    fit: *const OsmLogitFit,
    index: usize,
    out: *mut f64,
    pick: impl Fn(&model::ChoiceModelResult, usize) -> f64,
) -> OsmStatus {
    if fit.is_null() || out.is_null() {
        return OsmStatus::NullArgument;
    }
    let inner = &(*fit).inner;
    if index >= inner.coefficients.len() {
        return OsmStatus::InvalidArgument;
    }
    *out = pick(inner, index);
    OsmStatus::Ok
}

/// Coefficient estimate at `index`.
///
/// # Safety
/// `fit` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn osm_logit_coefficient(
    fit: *const OsmLogitFit,
    index: usize,
    out: *mut f64,
) -> OsmStatus {
    logit_field(fit, index, out, |r, i| r.coefficients[i])
}

/// Classical standard error at `index`.
///
/// # Safety
/// `fit` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn osm_logit_classical_se(
    fit: *const OsmLogitFit,
    index: usize,
    out: *mut f64,
) -> OsmStatus {
    logit_field(fit, index, out, |r, i| r.classical_se[i])
}

/// Robust (sandwich) standard error at `index`.
///
/// # Safety
/// `fit` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn osm_logit_robust_se(
    fit: *const OsmLogitFit,
    index: usize,
    out: *mut f64,
) -> OsmStatus {
    logit_field(fit, index, out, |r, i| r.robust_se[i])
}

/// Final and intercept-only log-likelihoods.
///
/// # Safety
/// `fit` must be a live handle; out-pointers writable.
#[no_mangle]
pub unsafe extern "C" fn osm_logit_loglik(
    fit: *const OsmLogitFit,
    final_out: *mut f64,
    null_out: *mut f64,
) -> OsmStatus {
    if fit.is_null() || final_out.is_null() || null_out.is_null() {
        return OsmStatus::NullArgument;
    }
    *final_out = (*fit).inner.loglik_final;
    *null_out = (*fit).inner.loglik_null;
    OsmStatus::Ok
}

/// 1 when the optimizer met its gradient tolerance.
///
/// # Safety
/// `fit` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn osm_logit_converged(fit: *const OsmLogitFit) -> i32 {
    if fit.is_null() {
        return 0;
    }
    (*fit).inner.converged as i32
}

/// Release a fit handle. Passing NULL is a no-op.
///
/// # Safety
/// `fit` must be NULL or a handle from [`osm_logit_fit`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn osm_logit_fit_free(fit: *mut OsmLogitFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}
