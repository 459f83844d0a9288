//! C ABI over `psd-affine`.
//!
//! Parameters live behind an opaque [`PsdParams`] handle built from the same
//! JSON the command line reads. Matrices cross the boundary as row-major
//! `d * d` arrays of doubles and must be exactly symmetric. Every function
//! returns a [`PsdStatus`]; on failure the message is kept per thread and
//! can be fetched with [`psd_last_error_message`]. Successful calls leave
//! the previous message in place.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use psd_affine::cli::files::parse_params;
use psd_affine::closedform::{mbajd_transform, MBAJDSpec};
use psd_affine::model::{validate, AffineParams};
use psd_affine::montecarlo::{estimate_transform, SimConfig};
use psd_affine::riccati::{transform, SolverConfig};
use psd_affine::symcore::{CSymMatrix, SymMatrix};
use psd_affine::Error;

/// Opaque parameter set.
pub struct PsdParams {
    inner: AffineParams,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsdStatus {
    Ok = 0,
    NullPointer = 1,
    /// Malformed JSON, bad UTF-8 or a shape error in the input.
    InvalidInput = 2,
    InvalidParams = 3,
    DimensionMismatch = 4,
    NotSymmetric = 5,
    NotPsd = 6,
    Domain = 7,
    NonConservative = 8,
    BlowUp = 9,
    StepUnderflow = 10,
    Singular = 11,
    BranchAmbiguity = 12,
    NoConvergence = 13,
    CrossCheck = 14,
    /// Non-finite values or a failed eigendecomposition.
    Numerical = 15,
    Panic = 16,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PsdComplex {
    pub re: f64,
    pub im: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PsdMcEstimate {
    pub mean: PsdComplex,
    pub stderr: f64,
    pub n_paths: u64,
    /// Step actually used.
    pub dt: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> PsdStatus {
    match e {
        Error::DimensionMismatch { .. } => PsdStatus::DimensionMismatch,
        Error::NotSymmetric { .. } => PsdStatus::NotSymmetric,
        Error::NonFinite | Error::EigenNoConvergence => PsdStatus::Numerical,
        Error::NotPsd { .. } => PsdStatus::NotPsd,
        Error::Singular => PsdStatus::Singular,
        Error::Domain(_) => PsdStatus::Domain,
        Error::InvalidParams(_) => PsdStatus::InvalidParams,
        Error::NonConservative(_) => PsdStatus::NonConservative,
        Error::BlowUp { .. } => PsdStatus::BlowUp,
        Error::StepUnderflow { .. } => PsdStatus::StepUnderflow,
        Error::BranchAmbiguity { .. } => PsdStatus::BranchAmbiguity,
        Error::CrossCheck(_) => PsdStatus::CrossCheck,
        Error::NoConvergence(_) => PsdStatus::NoConvergence,
    }
}

struct Failure(PsdStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(PsdStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, recording its error message and converting panics.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PsdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PsdStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            PsdStatus::Panic
        }
    }
}

unsafe fn params_ref<'a>(p: *const PsdParams) -> Result<&'a AffineParams, Failure> {
    // SAFETY: non-null handles come from psd_params_from_json and are not yet freed
    unsafe { p.as_ref() }.map(|h| &h.inner).ok_or_else(|| null("params"))
}

unsafe fn matrix(ptr: *const f64, d: usize, what: &str) -> Result<SymMatrix, Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    // SAFETY: the caller promises d * d readable doubles
    let data = unsafe { std::slice::from_raw_parts(ptr, d * d) };
    let rows: Vec<Vec<f64>> = data.chunks(d).map(<[f64]>::to_vec).collect();
    SymMatrix::from_rows(&rows).map_err(|e| Failure(status_of(&e), format!("{what}: {e}")))
}

/// `u_im` may be null for real `u`.
unsafe fn complex_matrix(re: *const f64, im: *const f64, d: usize) -> Result<CSymMatrix, Failure> {
    let re = unsafe { matrix(re, d, "u_re")? };
    let im = if im.is_null() { SymMatrix::zeros(d) } else { unsafe { matrix(im, d, "u_im")? } };
    Ok(CSymMatrix { re, im })
}

fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    // SAFETY: checked for null; the caller owns the storage
    match unsafe { out.as_mut() } {
        Some(slot) => {
            *slot = value;
            Ok(())
        }
        None => Err(null("out")),
    }
}

fn complex(z: num_complex::Complex64) -> PsdComplex {
    PsdComplex { re: z.re, im: z.im }
}

/// Parses a parameter file (NUL-terminated JSON) into a new handle stored in
/// `*out`. Free it with [`psd_params_free`].
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn psd_params_from_json(json: *const c_char, out: *mut *mut PsdParams) -> PsdStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: checked for null above
        let text = unsafe { CStr::from_ptr(json) }
            .to_str()
            .map_err(|e| Failure(PsdStatus::InvalidInput, format!("json is not UTF-8: {e}")))?;
        let inner = parse_params("<json>", text).map_err(|e| Failure(PsdStatus::InvalidInput, e.to_string()))?;
        let handle = Box::into_raw(Box::new(PsdParams { inner }));
        // SAFETY: checked for null above
        unsafe { *out = handle };
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `params` must come from [`psd_params_from_json`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn psd_params_free(params: *mut PsdParams) {
    if !params.is_null() {
        // SAFETY: ownership returns to Rust exactly once
        drop(unsafe { Box::from_raw(params) });
    }
}

/// Matrix dimension `d`, or 0 for a null handle.
///
/// # Safety
/// `params` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn psd_params_dim(params: *const PsdParams) -> usize {
    unsafe { params.as_ref() }.map_or(0, |p| p.inner.d)
}

/// Admissibility check. `*passed` is set to 1 when every check passes;
/// otherwise the names of the failed checks become the last error message.
///
/// # Safety
/// `params` must be a live handle and `passed` writable.
#[no_mangle]
pub unsafe extern "C" fn psd_validate(params: *const PsdParams, random_pairs: usize, tol: f64, passed: *mut c_int) -> PsdStatus {
    guard(|| {
        let p = unsafe { params_ref(params)? };
        let report = validate(p, random_pairs, tol);
        if !report.passed() {
            let names: Vec<&str> = report.failures().map(|c| c.name).collect();
            set_error(format!("failed checks: {}", names.join(", ")));
        }
        write_out(passed, c_int::from(report.passed()))
    })
}

/// `E[exp(-<u, X_t>) | X_0 = x]` from the Riccati equations. `rtol` and
/// `atol` of 0 select the defaults.
///
/// # Safety
/// Matrix pointers must reference `d * d` doubles (`u_im` may be null) and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn psd_transform(
    params: *const PsdParams,
    u_re: *const f64,
    u_im: *const f64,
    x: *const f64,
    t: f64,
    rtol: f64,
    atol: f64,
    out: *mut PsdComplex,
) -> PsdStatus {
    guard(|| {
        let p = unsafe { params_ref(params)? };
        let u = unsafe { complex_matrix(u_re, u_im, p.d)? };
        let x = unsafe { matrix(x, p.d, "x")? };
        let cfg = solver_config(rtol, atol)?;
        write_out(out, complex(transform(p, &u, &x, t, &cfg)?))
    })
}

fn solver_config(rtol: f64, atol: f64) -> Result<SolverConfig, Failure> {
    let mut cfg = SolverConfig::default();
    if rtol > 0.0 {
        cfg.rel_tol = rtol;
    }
    if atol > 0.0 {
        cfg.abs_tol = atol;
    }
    cfg.check()?;
    Ok(cfg)
}

/// Characteristic function `E[exp(-i <w, X_t>)]`.
///
/// # Safety
/// As [`psd_transform`].
#[no_mangle]
pub unsafe extern "C" fn psd_char_function(
    params: *const PsdParams,
    w: *const f64,
    x: *const f64,
    t: f64,
    rtol: f64,
    atol: f64,
    out: *mut PsdComplex,
) -> PsdStatus {
    guard(|| {
        let p = unsafe { params_ref(params)? };
        let w = unsafe { matrix(w, p.d, "w")? };
        let x = unsafe { matrix(x, p.d, "x")? };
        let cfg = solver_config(rtol, atol)?;
        let u = CSymMatrix::from_imag(w);
        write_out(out, complex(transform(p, &u, &x, t, &cfg)?))
    })
}

/// Closed-form transform for basic affine jump-diffusion parameters.
///
/// # Safety
/// As [`psd_transform`].
#[no_mangle]
pub unsafe extern "C" fn psd_mbajd_transform(
    params: *const PsdParams,
    u_re: *const f64,
    u_im: *const f64,
    x: *const f64,
    t: f64,
    out: *mut PsdComplex,
) -> PsdStatus {
    guard(|| {
        let p = unsafe { params_ref(params)? };
        let u = unsafe { complex_matrix(u_re, u_im, p.d)? };
        let x = unsafe { matrix(x, p.d, "x")? };
        let spec = MBAJDSpec::from_params(p)?;
        write_out(out, complex(mbajd_transform(&spec, &u, &x, t)?))
    })
}

/// Monte Carlo estimate of the transform. Threads follow `PSDAFFINE_THREADS`.
///
/// # Safety
/// As [`psd_transform`].
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn psd_mc_transform(
    params: *const PsdParams,
    u_re: *const f64,
    u_im: *const f64,
    x: *const f64,
    t: f64,
    n_paths: u64,
    dt: f64,
    seed: u64,
    antithetic: c_int,
    out: *mut PsdMcEstimate,
) -> PsdStatus {
    guard(|| {
        let p = unsafe { params_ref(params)? };
        let u = unsafe { complex_matrix(u_re, u_im, p.d)? };
        let x = unsafe { matrix(x, p.d, "x")? };
        let n_paths = usize::try_from(n_paths).map_err(|_| Failure(PsdStatus::InvalidInput, "n_paths too large".into()))?;
        let cfg = SimConfig { n_paths, dt, seed, antithetic: antithetic != 0, ..Default::default() };
        let e = estimate_transform(p, &u, &x, t, &cfg)?;
        write_out(out, PsdMcEstimate { mean: complex(e.mean), stderr: e.stderr, n_paths: e.n_paths as u64, dt: e.dt })
    })
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes) and returns the full message length. Pass a
/// null `buf` to query the length.
///
/// # Safety
/// `buf` must be null or hold `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn psd_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            // SAFETY: n + 1 <= len bytes are writable
            unsafe {
                std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn psd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
