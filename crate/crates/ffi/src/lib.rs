//! C ABI for the solver core: opaque handles, integer error codes, and a
//! thread-local last-error message. The header is generated by cbindgen at
//! build time (include/beltrami.h).

use beltrami_core::anisotropic::{solve_poisson_semilinear, MatrixField};
use beltrami_core::beltrami::{
    invert_map, principal_map, residual_beltrami, solve_inhomogeneous, BeltramiCoefficient,
    LinearSolveConfig, QCMap, SolveReport,
};
use beltrami_core::semilinear::{solve_semilinear, ContinuationConfig, Nonlinearity};
use beltrami_core::{ComplexField, Error, Grid, RealField};
use num_complex::Complex64;
use std::cell::RefCell;
use std::ffi::{c_char, c_double, c_int};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BltStatus {
    Ok = 0,
    ConfigError = 1,
    MissingSupport = 2,
    Degenerate = 3,
    Ellipticity = 4,
    NonpositiveJacobian = 5,
    OutOfRange = 6,
    NewtonStagnation = 7,
    Diverged = 8,
    Blowup = 9,
    NotConjugate = 10,
    InversionCoverage = 11,
    GridMismatch = 12,
    IoError = 13,
    FormatError = 14,
    JsonError = 15,
    NullArgument = 16,
    Panic = 17,
}

/// Nonlinearity selector for the semilinear entry points.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BltQKind {
    Constant = 0,
    Power = 1,
    SignedPower = 2,
    NegExp = 3,
}

pub struct BltComplexField(ComplexField);
pub struct BltRealField(RealField);
pub struct BltMu(BeltramiCoefficient);
pub struct BltMap(QCMap);
pub struct BltReport(SolveReport);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.to_string());
}

fn status_of(e: &Error) -> BltStatus {
    match e {
        Error::Config(_) => BltStatus::ConfigError,
        Error::MissingSupport => BltStatus::MissingSupport,
        Error::Degenerate(_) => BltStatus::Degenerate,
        Error::Ellipticity(_) => BltStatus::Ellipticity,
        Error::NonpositiveJacobian(_) => BltStatus::NonpositiveJacobian,
        Error::OutOfRange(_) => BltStatus::OutOfRange,
        Error::NewtonStagnation => BltStatus::NewtonStagnation,
        Error::Diverged(_) => BltStatus::Diverged,
        Error::Blowup(_) => BltStatus::Blowup,
        Error::NotConjugate(_) => BltStatus::NotConjugate,
        Error::InversionCoverage { .. } => BltStatus::InversionCoverage,
        Error::GridMismatch(_) => BltStatus::GridMismatch,
        Error::Io(_) => BltStatus::IoError,
        Error::Format(_) => BltStatus::FormatError,
        Error::Json(_) => BltStatus::JsonError,
    }
}

fn fail(e: Error) -> BltStatus {
    set_error(&e.to_string());
    status_of(&e)
}

fn guarded(f: impl FnOnce() -> BltStatus) -> BltStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            BltStatus::Panic
        }
    }
}

/// Copy the last error message into `buf` (NUL-terminated, truncating) and
/// return the full message length in bytes.
///
/// # Safety
/// `buf` must point to `len` writable bytes, or be null (then only the
/// length is returned).
#[no_mangle]
pub unsafe extern "C" fn blt_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let m = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, m);
            *buf.add(m) = 0;
        }
        bytes.len()
    })
}

fn make_grid(n: u32, half_extent: c_double) -> Result<Grid, Error> {
    Grid::new(n as usize, half_extent)
}

// ---- fields --------------------------------------------------------------

/// Create a complex field from `n*n` interleaved (re, im) pairs in row-major
/// order. `support_radius < 0` means no declared compact support.
///
/// # Safety
/// `values` must point to `2*n*n` doubles; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn blt_complex_field_create(
    n: u32,
    half_extent: c_double,
    values: *const c_double,
    support_radius: c_double,
    out: *mut *mut BltComplexField,
) -> BltStatus {
    if values.is_null() || out.is_null() {
        set_error("null argument");
        return BltStatus::NullArgument;
    }
    guarded(|| {
        let grid = match make_grid(n, half_extent) {
            Ok(g) => g,
            Err(e) => return fail(e),
        };
        let len = grid.len();
        let slice = std::slice::from_raw_parts(values, 2 * len);
        let mut f = ComplexField::zeros(grid);
        for i in 0..len {
            f.data[i] = Complex64::new(slice[2 * i], slice[2 * i + 1]);
        }
        f.support_radius = if support_radius < 0.0 {
            None
        } else {
            Some(support_radius)
        };
        *out = Box::into_raw(Box::new(BltComplexField(f)));
        BltStatus::Ok
    })
}

/// Copy the field's node totals into `values` as interleaved (re, im) pairs.
///
/// # Safety
/// `field` must be a live handle; `values` must hold `2*n*n` doubles.
#[no_mangle]
pub unsafe extern "C" fn blt_complex_field_values(
    field: *const BltComplexField,
    values: *mut c_double,
) -> BltStatus {
    if field.is_null() || values.is_null() {
        set_error("null argument");
        return BltStatus::NullArgument;
    }
    guarded(|| {
        let f = &(*field).0;
        let totals = f.total();
        let out = std::slice::from_raw_parts_mut(values, 2 * totals.len());
        for (i, v) in totals.iter().enumerate() {
            out[2 * i] = v.re;
            out[2 * i + 1] = v.im;
        }
        BltStatus::Ok
    })
}

/// # Safety
/// `field` must be a live handle (or null, which is a no-op).
#[no_mangle]
pub unsafe extern "C" fn blt_complex_field_free(field: *mut BltComplexField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Create a real field from `n*n` row-major samples; see
/// `blt_complex_field_create` for the support convention.
///
/// # Safety
/// `values` must point to `n*n` doubles; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn blt_real_field_create(
    n: u32,
    half_extent: c_double,
    values: *const c_double,
    support_radius: c_double,
    out: *mut *mut BltRealField,
) -> BltStatus {
    if values.is_null() || out.is_null() {
        set_error("null argument");
        return BltStatus::NullArgument;
    }
    guarded(|| {
        let grid = match make_grid(n, half_extent) {
            Ok(g) => g,
            Err(e) => return fail(e),
        };
        let len = grid.len();
        let slice = std::slice::from_raw_parts(values, len);
        let mut f = RealField::zeros(grid);
        f.data.copy_from_slice(slice);
        f.support_radius = if support_radius < 0.0 {
            None
        } else {
            Some(support_radius)
        };
        *out = Box::into_raw(Box::new(BltRealField(f)));
        BltStatus::Ok
    })
}

/// # Safety
/// `field` must be a live handle; `values` must hold `n*n` doubles.
#[no_mangle]
pub unsafe extern "C" fn blt_real_field_values(
    field: *const BltRealField,
    values: *mut c_double,
) -> BltStatus {
    if field.is_null() || values.is_null() {
        set_error("null argument");
        return BltStatus::NullArgument;
    }
    guarded(|| {
        let totals = (*field).0.total();
        std::slice::from_raw_parts_mut(values, totals.len()).copy_from_slice(&totals);
        BltStatus::Ok
    })
}

/// # Safety
/// `field` must be a live handle (or null, which is a no-op).
#[no_mangle]
pub unsafe extern "C" fn blt_real_field_free(field: *mut BltRealField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

// ---- Beltrami coefficients ----------------------------------------------

/// Certify a complex field as a Beltrami coefficient (consumes nothing; the
/// field is copied). Fails with `Degenerate` when sup|mu| is not < 1.
///
/// # Safety
/// `field` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn blt_mu_create(
    field: *const BltComplexField,
    out: *mut *mut BltMu,
) -> BltStatus {
    if field.is_null() || out.is_null() {
        set_error("null argument");
        return BltStatus::NullArgument;
    }
    guarded(|| match BeltramiCoefficient::new((*field).0.clone()) {
        Ok(mu) => {
            *out = Box::into_raw(Box::new(BltMu(mu)));
            BltStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// The zero coefficient (conformal case) on an n-by-n window.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn blt_mu_zero(
    n: u32,
    half_extent: c_double,
    out: *mut *mut BltMu,
) -> BltStatus {
    if out.is_null() {
        set_error("null argument");
        return BltStatus::NullArgument;
    }
    guarded(|| match make_grid(n, half_extent) {
        Ok(g) => {
            *out = Box::into_raw(Box::new(BltMu(BeltramiCoefficient::zero(g))));
            BltStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// sup|mu| of a certified coefficient.
///
/// # Safety
/// `mu` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn blt_mu_k(mu: *const BltMu) -> c_double {
    if mu.is_null() {
        return f64::NAN;
    }
    (*mu).0.k()
}

/// # Safety
/// `mu` must be a live handle (or null, which is a no-op).
#[no_mangle]
pub unsafe extern "C" fn blt_mu_free(mu: *mut BltMu) {
    if !mu.is_null() {
        drop(Box::from_raw(mu));
    }
}

// ---- reports -------------------------------------------------------------

/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn blt_report_converged(report: *const BltReport) -> c_int {
    if report.is_null() {
        return 0;
    }
    (*report).0.converged as c_int
}

/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn blt_report_iterations(report: *const BltReport) -> u64 {
    if report.is_null() {
        return 0;
    }
    (*report).0.iterations as u64
}

/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn blt_report_final_residual(report: *const BltReport) -> c_double {
    if report.is_null() {
        return f64::NAN;
    }
    (*report).0.final_residual
}

/// Serialize the report as JSON into `buf` (NUL-terminated, truncating);
/// returns the full length in bytes.
///
/// # Safety
/// `report` must be a live handle; `buf` must hold `len` bytes or be null.
#[no_mangle]
pub unsafe extern "C" fn blt_report_json(
    report: *const BltReport,
    buf: *mut c_char,
    len: usize,
) -> usize {
    if report.is_null() {
        return 0;
    }
    let json = (*report).0.to_json();
    let bytes = json.as_bytes();
    if !buf.is_null() && len > 0 {
        let m = bytes.len().min(len - 1);
        std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, m);
        *buf.add(m) = 0;
    }
    bytes.len()
}

/// # Safety
/// `report` must be a live handle (or null, which is a no-op).
#[no_mangle]
pub unsafe extern "C" fn blt_report_free(report: *mut BltReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

// ---- solvers -------------------------------------------------------------

fn make_q(kind: BltQKind, param: f64) -> Result<Nonlinearity, Error> {
    match kind {
        BltQKind::Constant => Ok(Nonlinearity::constant(Complex64::new(param, 0.0))),
        BltQKind::Power => Nonlinearity::power(param),
        BltQKind::SignedPower => Nonlinearity::signed_power(param),
        BltQKind::NegExp => Ok(Nonlinearity::neg_exp()),
    }
}

fn make_real_q(kind: BltQKind, param: f64) -> Result<Nonlinearity, Error> {
    match kind {
        BltQKind::Constant => Ok(Nonlinearity::constant(Complex64::new(param, 0.0))),
        BltQKind::Power => Nonlinearity::real_power(param),
        BltQKind::SignedPower => Nonlinearity::real_signed_power(param),
        BltQKind::NegExp => Ok(Nonlinearity::real_neg_exp()),
    }
}

/// Solve omega_zbar = mu omega_z + sigma. `tol <= 0` or `max_iter == 0`
/// select the defaults.
///
/// # Safety
/// `mu` and `sigma` must be live handles; `omega_out` and `report_out` must
/// be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn blt_solve_beltrami(
    mu: *const BltMu,
    sigma: *const BltComplexField,
    tol: c_double,
    max_iter: u64,
    omega_out: *mut *mut BltComplexField,
    report_out: *mut *mut BltReport,
) -> BltStatus {
    if mu.is_null() || sigma.is_null() || omega_out.is_null() || report_out.is_null() {
        set_error("null argument");
        return BltStatus::NullArgument;
    }
    guarded(|| {
        let mut cfg = LinearSolveConfig::default();
        if tol > 0.0 {
            cfg.tol = tol;
        }
        if max_iter > 0 {
            cfg.max_iter = max_iter as usize;
        }
        match solve_inhomogeneous(&(*mu).0, &(*sigma).0, &cfg) {
            Ok((omega, report)) => {
                *omega_out = Box::into_raw(Box::new(BltComplexField(omega)));
                *report_out = Box::into_raw(Box::new(BltReport(report)));
                BltStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Solve omega_zbar = mu omega_z + sigma q(omega) by tau-continuation with
/// default continuation parameters.
///
/// # Safety
/// `mu` and `sigma` must be live handles; `omega_out` and `report_out` must
/// be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn blt_solve_semilinear(
    mu: *const BltMu,
    sigma: *const BltComplexField,
    q_kind: BltQKind,
    q_param: c_double,
    omega_out: *mut *mut BltComplexField,
    report_out: *mut *mut BltReport,
) -> BltStatus {
    if mu.is_null() || sigma.is_null() || omega_out.is_null() || report_out.is_null() {
        set_error("null argument");
        return BltStatus::NullArgument;
    }
    guarded(|| {
        let q = match make_q(q_kind, q_param) {
            Ok(q) => q,
            Err(e) => return fail(e),
        };
        let cfg = ContinuationConfig::default();
        match solve_semilinear(&(*mu).0, &(*sigma).0, &q, &cfg) {
            Ok((omega, report)) => {
                *omega_out = Box::into_raw(Box::new(BltComplexField(omega)));
                *report_out = Box::into_raw(Box::new(BltReport(report)));
                BltStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Solve div(A grad u) = G Q(u) with A given entrywise (det A = 1 required)
/// and Q acting on Re omega.
///
/// # Safety
/// `a11`, `a12`, `a22`, and `source` must be live handles; `u_out` and
/// `report_out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn blt_solve_poisson(
    a11: *const BltRealField,
    a12: *const BltRealField,
    a22: *const BltRealField,
    source: *const BltRealField,
    q_kind: BltQKind,
    q_param: c_double,
    u_out: *mut *mut BltRealField,
    report_out: *mut *mut BltReport,
) -> BltStatus {
    if a11.is_null()
        || a12.is_null()
        || a22.is_null()
        || source.is_null()
        || u_out.is_null()
        || report_out.is_null()
    {
        set_error("null argument");
        return BltStatus::NullArgument;
    }
    guarded(|| {
        let a = match MatrixField::new((*a11).0.clone(), (*a12).0.clone(), (*a22).0.clone()) {
            Ok(a) => a,
            Err(e) => return fail(e),
        };
        let q = match make_real_q(q_kind, q_param) {
            Ok(q) => q,
            Err(e) => return fail(e),
        };
        let cfg = ContinuationConfig::default();
        match solve_poisson_semilinear(&a, &(*source).0, &q, &cfg) {
            Ok((u, report, _artifacts)) => {
                *u_out = Box::into_raw(Box::new(BltRealField(u)));
                *report_out = Box::into_raw(Box::new(BltReport(report)));
                BltStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Residual of omega in the inhomogeneous Beltrami equation (relative L2).
///
/// # Safety
/// All handles must be live; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn blt_residual_beltrami(
    mu: *const BltMu,
    sigma: *const BltComplexField,
    omega: *const BltComplexField,
    out: *mut c_double,
) -> BltStatus {
    if mu.is_null() || sigma.is_null() || omega.is_null() || out.is_null() {
        set_error("null argument");
        return BltStatus::NullArgument;
    }
    guarded(|| {
        *out = residual_beltrami(&(*mu).0, &(*sigma).0, &(*omega).0);
        BltStatus::Ok
    })
}

// ---- principal maps ------------------------------------------------------

/// Compute the certified principal homeomorphism f = z + Cauchy(h).
///
/// # Safety
/// `mu` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn blt_principal_map(
    mu: *const BltMu,
    tol: c_double,
    max_iter: u64,
    out: *mut *mut BltMap,
) -> BltStatus {
    if mu.is_null() || out.is_null() {
        set_error("null argument");
        return BltStatus::NullArgument;
    }
    guarded(|| {
        let mut cfg = LinearSolveConfig::default();
        if tol > 0.0 {
            cfg.tol = tol;
        }
        if max_iter > 0 {
            cfg.max_iter = max_iter as usize;
        }
        match principal_map(&(*mu).0, &cfg) {
            Ok(map) => {
                *out = Box::into_raw(Box::new(BltMap(map)));
                BltStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Forward evaluation w = f(z) by bicubic interpolation.
///
/// # Safety
/// `map` must be a live handle; `wx` and `wy` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn blt_map_eval(
    map: *const BltMap,
    zx: c_double,
    zy: c_double,
    wx: *mut c_double,
    wy: *mut c_double,
) -> BltStatus {
    if map.is_null() || wx.is_null() || wy.is_null() {
        set_error("null argument");
        return BltStatus::NullArgument;
    }
    guarded(|| {
        let w = (*map).0.eval(Complex64::new(zx, zy));
        *wx = w.re;
        *wy = w.im;
        BltStatus::Ok
    })
}

/// Newton inversion z = f^{-1}(w) within the certified image region.
///
/// # Safety
/// `map` must be a live handle; `zx` and `zy` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn blt_map_invert(
    map: *const BltMap,
    wx: c_double,
    wy: c_double,
    zx: *mut c_double,
    zy: *mut c_double,
) -> BltStatus {
    if map.is_null() || zx.is_null() || zy.is_null() {
        set_error("null argument");
        return BltStatus::NullArgument;
    }
    guarded(|| match invert_map(&(*map).0, Complex64::new(wx, wy)) {
        Ok(z) => {
            *zx = z.re;
            *zy = z.im;
            BltStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// # Safety
/// `map` must be a live handle (or null, which is a no-op).
#[no_mangle]
pub unsafe extern "C" fn blt_map_free(map: *mut BltMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}
