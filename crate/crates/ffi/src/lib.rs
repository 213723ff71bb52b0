//! C ABI over the `pseudospec` library.
//!
//! Every fallible function returns a `PsStatus`; outputs are written
//! through pointers. Collections are returned as opaque handles that the
//! caller releases with the matching `*_free`. After a failure,
//! `ps_last_error_message` copies a description of the most recent error
//! on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64 as C64;
use pseudospec::error::Error;
use pseudospec::models::{delta_eigenvalue, find_step_eigenvalues, StepModel};
use pseudospec::pseudospectrum::{
    compute_field, export_field, ExportFormat, GridSpec, OracleConfig, PointStatus, PseudospectrumField,
};
use pseudospec::resolvent_bounds::compute_bounds;
use pseudospec::spectral_kernel::{classify_region, dirichlet_kernel, resolvent_kernel, wave_numbers, Region, TOL_SPEC};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsStatus {
    Ok = 0,
    Spectrum = 1,
    Domain = 2,
    Config = 3,
    Singular = 4,
    ZeroCoupling = 5,
    NoConvergence = 6,
    EigenvalueLost = 7,
    Io = 8,
    NullPointer = 9,
    OutOfRange = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsComplex {
    pub re: f64,
    pub im: f64,
}

impl From<PsComplex> for C64 {
    fn from(c: PsComplex) -> Self {
        C64::new(c.re, c.im)
    }
}

impl From<C64> for PsComplex {
    fn from(c: C64) -> Self {
        PsComplex { re: c.re, im: c.im }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsRegion {
    DPlus = 0,
    DMinus = 1,
    U = 2,
    W = 3,
    Spectrum = 4,
}

impl From<Region> for PsRegion {
    fn from(r: Region) -> Self {
        match r {
            Region::DPlus => PsRegion::DPlus,
            Region::DMinus => PsRegion::DMinus,
            Region::U => PsRegion::U,
            Region::W => PsRegion::W,
            Region::Spectrum => PsRegion::Spectrum,
        }
    }
}

/// One point of a pseudospectrum field. `has_oracle` is 0 when the FD
/// oracle was not requested; `status` is 0 for a clean point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsFieldPoint {
    pub z: PsComplex,
    pub region: PsRegion,
    pub lower: f64,
    pub upper: f64,
    pub oracle: f64,
    pub has_oracle: i32,
    pub status: i32,
}

/// Opaque pseudospectrum field.
pub struct PsField {
    inner: PseudospectrumField,
}

/// Opaque list of step-model eigenvalues.
pub struct PsStepModel {
    inner: StepModel,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> PsStatus {
    match e {
        Error::Spectrum(_) => PsStatus::Spectrum,
        Error::Domain(_) => PsStatus::Domain,
        Error::Config(_) => PsStatus::Config,
        Error::Singular(_) => PsStatus::Singular,
        Error::ZeroCoupling => PsStatus::ZeroCoupling,
        Error::NoConvergence(_) => PsStatus::NoConvergence,
        Error::EigenvalueLost { .. } => PsStatus::EigenvalueLost,
        Error::Io(_) => PsStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> Result<(), PsStatus>) -> PsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PsStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".to_string());
            PsStatus::Panic
        }
    }
}

fn fail(e: Error) -> PsStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null() -> PsStatus {
    set_error("null pointer argument".to_string());
    PsStatus::NullPointer
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes). Returns the full message length.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn ps_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ps_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// # Safety
/// Output pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ps_wave_numbers(z: PsComplex, k_plus: *mut PsComplex, k_minus: *mut PsComplex) -> PsStatus {
    if k_plus.is_null() || k_minus.is_null() {
        return null();
    }
    guard(|| {
        let wn = wave_numbers(z.into());
        *k_plus = wn.k_plus.into();
        *k_minus = wn.k_minus.into();
        Ok(())
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ps_resolvent_kernel(z: PsComplex, x: f64, y: f64, out: *mut PsComplex) -> PsStatus {
    if out.is_null() {
        return null();
    }
    guard(|| {
        *out = resolvent_kernel(z.into(), x, y).map_err(fail)?.into();
        Ok(())
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ps_dirichlet_kernel(z: PsComplex, x: f64, y: f64, out: *mut PsComplex) -> PsStatus {
    if out.is_null() {
        return null();
    }
    guard(|| {
        *out = dirichlet_kernel(z.into(), x, y).map_err(fail)?.into();
        Ok(())
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ps_classify_region(z: PsComplex, out: *mut PsRegion) -> PsStatus {
    if out.is_null() {
        return null();
    }
    guard(|| {
        *out = classify_region(z.into(), TOL_SPEC).into();
        Ok(())
    })
}

/// Analytic lower and upper bounds on the resolvent norm.
///
/// # Safety
/// Output pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ps_bounds(z: PsComplex, lower: *mut f64, upper: *mut f64) -> PsStatus {
    if lower.is_null() || upper.is_null() {
        return null();
    }
    guard(|| {
        let b = compute_bounds(z.into()).map_err(fail)?;
        *lower = b.lower;
        *upper = b.upper;
        Ok(())
    })
}

/// `λ(α)` and whether it is an eigenvalue (1) or not (0).
///
/// # Safety
/// Output pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ps_delta_eigenvalue(alpha: PsComplex, lambda: *mut PsComplex, exists: *mut i32) -> PsStatus {
    if lambda.is_null() || exists.is_null() {
        return null();
    }
    guard(|| {
        let m = delta_eigenvalue(alpha.into()).map_err(fail)?;
        *lambda = m.lambda.into();
        *exists = m.exists as i32;
        Ok(())
    })
}

/// Compute a field on an `n_re × n_im` grid. Pass `oracle_n = 0` to skip
/// the FD oracle. On success `*out` owns a handle for `ps_field_free`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ps_field_compute(
    re_min: f64,
    re_max: f64,
    n_re: usize,
    im_min: f64,
    im_max: f64,
    n_im: usize,
    oracle_n: usize,
    oracle_half_length: f64,
    seed: u64,
    out: *mut *mut PsField,
) -> PsStatus {
    if out.is_null() {
        return null();
    }
    guard(|| {
        let grid = GridSpec { re_min, re_max, im_min, im_max, n_re, n_im };
        let oracle = (oracle_n > 0).then(|| OracleConfig { n: oracle_n, half_length: oracle_half_length, seed, ..Default::default() });
        let field = compute_field(grid, oracle).map_err(fail)?;
        *out = Box::into_raw(Box::new(PsField { inner: field }));
        Ok(())
    })
}

/// Number of points in the field (0 for a null handle).
///
/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_field_len(field: *const PsField) -> usize {
    field.as_ref().map(|f| f.inner.points.len()).unwrap_or(0)
}

/// # Safety
/// `field` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ps_field_point(field: *const PsField, index: usize, out: *mut PsFieldPoint) -> PsStatus {
    let (Some(f), false) = (field.as_ref(), out.is_null()) else {
        return null();
    };
    let Some(p) = f.inner.points.get(index) else {
        set_error(format!("index {index} out of range for {} points", f.inner.points.len()));
        return PsStatus::OutOfRange;
    };
    *out = PsFieldPoint {
        z: p.z.into(),
        region: p.region.into(),
        lower: p.lower,
        upper: p.upper,
        oracle: p.oracle.unwrap_or(f64::NAN),
        has_oracle: p.oracle.is_some() as i32,
        status: match p.status {
            PointStatus::Ok => 0,
            PointStatus::Spectrum => 1,
            PointStatus::OracleSingular => 2,
            PointStatus::OracleFailed => 3,
            PointStatus::BoundFailed => 4,
        },
    };
    PsStatus::Ok
}

/// Write the field as CSV (`format = 0`) or JSON (`format = 1`).
///
/// # Safety
/// `field` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ps_field_write(field: *const PsField, path: *const c_char, format: i32) -> PsStatus {
    let (Some(f), false) = (field.as_ref(), path.is_null()) else {
        return null();
    };
    guard(|| {
        let p = CStr::from_ptr(path).to_str().map_err(|_| fail(Error::Config("path is not valid UTF-8".into())))?;
        let fmt = match format {
            0 => ExportFormat::Csv,
            1 => ExportFormat::Json,
            _ => return Err(fail(Error::Config(format!("unknown format code {format}")))),
        };
        export_field(&f.inner, std::path::Path::new(p), fmt).map_err(fail)
    })
}

/// # Safety
/// `field` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ps_field_free(field: *mut PsField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Real eigenvalues of the step model in `(-b, lambda_max]`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ps_step_find(a: f64, b: f64, lambda_max: f64, out: *mut *mut PsStepModel) -> PsStatus {
    if out.is_null() {
        return null();
    }
    guard(|| {
        let m = find_step_eigenvalues(a, b, lambda_max).map_err(fail)?;
        *out = Box::into_raw(Box::new(PsStepModel { inner: m }));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ps_step_count(model: *const PsStepModel) -> usize {
    model.as_ref().map(|m| m.inner.eigenvalues.len()).unwrap_or(0)
}

/// # Safety
/// `model` must be a live handle and output pointers valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ps_step_get(model: *const PsStepModel, index: usize, lambda: *mut f64, residual: *mut f64) -> PsStatus {
    let (Some(m), false, false) = (model.as_ref(), lambda.is_null(), residual.is_null()) else {
        return null();
    };
    let Some(e) = m.inner.eigenvalues.get(index) else {
        set_error(format!("index {index} out of range for {} eigenvalues", m.inner.eigenvalues.len()));
        return PsStatus::OutOfRange;
    };
    *lambda = e.lambda;
    *residual = e.residual;
    PsStatus::Ok
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ps_step_free(model: *mut PsStepModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
