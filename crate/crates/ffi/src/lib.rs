//! C interface to `spdalign`.
//!
//! Matrices cross the boundary as row-major `double` buffers. SPD matrices
//! and fitted models live behind opaque handles that the caller releases
//! with the matching `_free` function. Every fallible call returns a
//! [`SpdalignStatus`]; on failure `spdalign_last_error` describes what went
//! wrong on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use nalgebra::DMatrix;

use spdalign::error::ErrorKind;
use spdalign::gca::{adapt_features, adapt_target_features, fit};
use spdalign::spd::{riccati_solve, riemannian_distance_sq, sharp_mean};
use spdalign::{AdaptationModel, Error, HyperParams, Method, SpdMatrix};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpdalignStatus {
    Ok = 0,
    NullPointer = 1,
    /// Invalid argument: bad shape or out-of-range parameter.
    Contract = 2,
    /// Malformed or inconsistent data.
    Data = 3,
    /// Input not SPD, ill-conditioned, or a failed decomposition.
    Numerical = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpdalignMethod {
    NoAdaptation = 0,
    Coral = 1,
    SubspaceAlignment = 2,
    BaselineSource = 3,
    BaselineTarget = 4,
    Gca1 = 5,
    Gca2 = 6,
    Gca3 = 7,
    CascadedGca2 = 8,
    CascadedGca3 = 9,
}

impl From<SpdalignMethod> for Method {
    fn from(m: SpdalignMethod) -> Method {
        match m {
            SpdalignMethod::NoAdaptation => Method::NoAdaptation,
            SpdalignMethod::Coral => Method::Coral,
            SpdalignMethod::SubspaceAlignment => Method::SubspaceAlignment,
            SpdalignMethod::BaselineSource => Method::BaselineSource,
            SpdalignMethod::BaselineTarget => Method::BaselineTarget,
            SpdalignMethod::Gca1 => Method::Gca1,
            SpdalignMethod::Gca2 => Method::Gca2,
            SpdalignMethod::Gca3 => Method::Gca3,
            SpdalignMethod::CascadedGca2 => Method::CascadedGca2,
            SpdalignMethod::CascadedGca3 => Method::CascadedGca3,
        }
    }
}

/// Hyperparameters. Zero in `num_kept` or `subspace_dim`, or a
/// nonpositive `bandwidth`, selects the library default.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SpdalignParams {
    pub t: f64,
    pub gamma: f64,
    pub mu: f64,
    pub k: usize,
    pub bandwidth: f64,
    pub sigma: f64,
    pub eps: f64,
    pub num_kept: usize,
    pub subspace_dim: usize,
    pub kernel_term: bool,
}

impl From<&SpdalignParams> for HyperParams {
    fn from(p: &SpdalignParams) -> HyperParams {
        let nonzero = |v: usize| (v > 0).then_some(v);
        HyperParams {
            t: p.t,
            gamma: p.gamma,
            mu: p.mu,
            k: p.k,
            bandwidth: (p.bandwidth > 0.0).then_some(p.bandwidth),
            sigma: p.sigma,
            eps: p.eps,
            num_kept: nonzero(p.num_kept),
            subspace_dim: nonzero(p.subspace_dim),
            kernel_term: p.kernel_term,
        }
    }
}

/// Opaque SPD matrix.
pub struct SpdalignSpd(SpdMatrix);

/// Opaque fitted adaptation model.
pub struct SpdalignModel(AdaptationModel);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> SpdalignStatus {
    match e.kind() {
        ErrorKind::Contract => SpdalignStatus::Contract,
        ErrorKind::Data => SpdalignStatus::Data,
        ErrorKind::Numerical => SpdalignStatus::Numerical,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SpdalignStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            SpdalignStatus::Ok
        }
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("{name} is null"));
            SpdalignStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            SpdalignStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    unsafe { p.as_ref() }.ok_or(Failure::Null(name))
}

unsafe fn read_matrix(data: *const f64, rows: usize, cols: usize, name: &'static str) -> Result<DMatrix<f64>, Failure> {
    if data.is_null() {
        return Err(Failure::Null(name));
    }
    let len = rows.checked_mul(cols).ok_or_else(|| Error::Contract(format!("{name}: size overflows")))?;
    let slice = unsafe { std::slice::from_raw_parts(data, len) };
    Ok(DMatrix::from_row_slice(rows, cols, slice))
}

unsafe fn write_matrix(m: &DMatrix<f64>, out: *mut f64, len: usize) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    let needed = m.nrows() * m.ncols();
    if len < needed {
        return Err(Error::Contract(format!("output buffer holds {len} values, {needed} needed")).into());
    }
    let slice = unsafe { std::slice::from_raw_parts_mut(out, needed) };
    for (r, row) in m.row_iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            slice[r * m.ncols() + c] = *v;
        }
    }
    Ok(())
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

/// Message for the most recent failure on this thread; empty after a
/// success. Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn spdalign_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn spdalign_params_default() -> SpdalignParams {
    let d = HyperParams::default();
    SpdalignParams {
        t: d.t,
        gamma: d.gamma,
        mu: d.mu,
        k: d.k,
        bandwidth: 0.0,
        sigma: d.sigma,
        eps: d.eps,
        num_kept: 0,
        subspace_dim: 0,
        kernel_term: d.kernel_term,
    }
}

/// Builds an SPD matrix from `dim * dim` row-major values.
///
/// # Safety
/// `data` must point to `dim * dim` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spdalign_spd_new(data: *const f64, dim: usize, out: *mut *mut SpdalignSpd) -> SpdalignStatus {
    guard(|| {
        let m = unsafe { read_matrix(data, dim, dim, "data")? };
        unsafe { store(out, SpdalignSpd(SpdMatrix::new(m)?)) }
    })
}

/// # Safety
/// `m` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn spdalign_spd_free(m: *mut SpdalignSpd) {
    if !m.is_null() {
        drop(unsafe { Box::from_raw(m) });
    }
}

/// Dimension of `m`, or 0 when `m` is null.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn spdalign_spd_dim(m: *const SpdalignSpd) -> usize {
    unsafe { m.as_ref() }.map_or(0, |m| m.0.dim())
}

/// Copies the entries of `m`, row-major, into `out` (capacity `len`).
///
/// # Safety
/// `m` must be a live handle; `out` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn spdalign_spd_copy(m: *const SpdalignSpd, out: *mut f64, len: usize) -> SpdalignStatus {
    guard(|| {
        let m = unsafe { deref(m, "m")? };
        unsafe { write_matrix(m.0.as_matrix(), out, len) }
    })
}

/// Point at `t` on the geodesic from `x` to `y`.
///
/// # Safety
/// `x` and `y` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spdalign_sharp_mean(
    x: *const SpdalignSpd,
    y: *const SpdalignSpd,
    t: f64,
    out: *mut *mut SpdalignSpd,
) -> SpdalignStatus {
    guard(|| {
        let (x, y) = unsafe { (deref(x, "x")?, deref(y, "y")?) };
        unsafe { store(out, SpdalignSpd(sharp_mean(&x.0, &y.0, t)?)) }
    })
}

/// The SPD solution of `A a_s A = a_t`.
///
/// # Safety
/// `a_s` and `a_t` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spdalign_riccati_solve(
    a_s: *const SpdalignSpd,
    a_t: *const SpdalignSpd,
    out: *mut *mut SpdalignSpd,
) -> SpdalignStatus {
    guard(|| {
        let (a_s, a_t) = unsafe { (deref(a_s, "a_s")?, deref(a_t, "a_t")?) };
        unsafe { store(out, SpdalignSpd(riccati_solve(&a_s.0, &a_t.0)?)) }
    })
}

/// Squared affine-invariant distance between `x` and `y`.
///
/// # Safety
/// `x` and `y` must be live handles of equal dimension; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spdalign_distance_sq(x: *const SpdalignSpd, y: *const SpdalignSpd, out: *mut f64) -> SpdalignStatus {
    guard(|| {
        let (x, y) = unsafe { (deref(x, "x")?, deref(y, "y")?) };
        if x.0.dim() != y.0.dim() {
            return Err(Error::Contract(format!("dimensions {} and {} differ", x.0.dim(), y.0.dim())).into());
        }
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        unsafe { *out = riemannian_distance_sq(&x.0, &y.0) };
        Ok(())
    })
}

/// Fits `method` on row-major source (`n × dim`) and target (`m × dim`)
/// features.
///
/// # Safety
/// `params` must be readable, `source` and `target` must hold `n * dim` and
/// `m * dim` doubles, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spdalign_model_fit(
    method: SpdalignMethod,
    params: *const SpdalignParams,
    source: *const f64,
    n: usize,
    target: *const f64,
    m: usize,
    dim: usize,
    out: *mut *mut SpdalignModel,
) -> SpdalignStatus {
    guard(|| {
        let params = HyperParams::from(unsafe { deref(params, "params")? });
        let source = unsafe { read_matrix(source, n, dim, "source")? };
        let target = unsafe { read_matrix(target, m, dim, "target")? };
        let model = fit(method.into(), &source, &target, &params)?;
        unsafe { store(out, SpdalignModel(model)) }
    })
}

/// # Safety
/// `model` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn spdalign_model_free(model: *mut SpdalignModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Width of adapted rows, or 0 when `model` is null.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn spdalign_model_output_dim(model: *const SpdalignModel) -> usize {
    unsafe { model.as_ref() }.map_or(0, |m| m.0.output_dim())
}

/// The learned metric of a geometric-mean method. Fails with `Contract` for
/// the baselines, which learn a general linear map instead.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn spdalign_model_metric(model: *const SpdalignModel, out: *mut *mut SpdalignSpd) -> SpdalignStatus {
    guard(|| {
        let model = unsafe { deref(model, "model")? };
        let metric = model
            .0
            .metric()
            .ok_or_else(|| Error::Contract(format!("{} has no metric", model.0.method())))?;
        unsafe { store(out, SpdalignSpd(metric.clone())) }
    })
}

unsafe fn adapt(
    model: *const SpdalignModel,
    features: *const f64,
    rows: usize,
    dim: usize,
    out: *mut f64,
    len: usize,
    target_side: bool,
) -> SpdalignStatus {
    guard(|| {
        let model = unsafe { deref(model, "model")? };
        let x = unsafe { read_matrix(features, rows, dim, "features")? };
        let adapted = if target_side {
            adapt_target_features(&model.0, &x)?
        } else {
            adapt_features(&model.0, &x)?
        };
        unsafe { write_matrix(&adapted, out, len) }
    })
}

/// Maps `rows × dim` source features into `out`, which must hold
/// `rows * spdalign_model_output_dim(model)` values.
///
/// # Safety
/// Pointers must be valid for the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn spdalign_model_adapt_source(
    model: *const SpdalignModel,
    features: *const f64,
    rows: usize,
    dim: usize,
    out: *mut f64,
    len: usize,
) -> SpdalignStatus {
    unsafe { adapt(model, features, rows, dim, out, len, false) }
}

/// Maps target features the same way; see `spdalign_model_adapt_source`.
///
/// # Safety
/// Pointers must be valid for the stated sizes.
#[no_mangle]
pub unsafe extern "C" fn spdalign_model_adapt_target(
    model: *const SpdalignModel,
    features: *const f64,
    rows: usize,
    dim: usize,
    out: *mut f64,
    len: usize,
) -> SpdalignStatus {
    unsafe { adapt(model, features, rows, dim, out, len, true) }
}
