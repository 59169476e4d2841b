//! C ABI for `rvopt`.
//!
//! Handles are opaque and owned by the caller once returned; release them with
//! the matching `*_free` function. Every fallible call returns an
//! [`RvoptStatus`] and, on failure, stores a message readable with
//! [`rvopt_last_error_message`] on the same thread. Strings handed out by the
//! library must be released with [`rvopt_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::DVector;
use rvopt::certify::{multiplier_certificate, Certificate, CertificateStatus, Problem};
use rvopt::report::{run_report, ReportOptions};
use rvopt::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RvoptStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Validation = 4,
    Dimension = 5,
    InvalidInput = 6,
    Numerical = 7,
    Io = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Outcome of a certificate.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RvoptCertificateStatus {
    Holds = 0,
    Violated = 1,
    LpInfeasible = 2,
    Inconclusive = 3,
}

/// A validated problem instance.
pub struct RvoptProblem(Problem);

/// A certificate computed at a reference point.
pub struct RvoptCertificate(Certificate);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> RvoptStatus {
    match e {
        Error::Parse { .. } => RvoptStatus::Parse,
        Error::Validation { .. } => RvoptStatus::Validation,
        Error::Dimension { .. } => RvoptStatus::Dimension,
        Error::Io(_) => RvoptStatus::Io,
        Error::NonConvergence { .. } | Error::Numerical(_) | Error::Diagnostic(_) => RvoptStatus::Numerical,
        Error::Input(_) | Error::UnsupportedRepresentation(_) | Error::Precondition(_) => RvoptStatus::InvalidInput,
    }
}

struct Fail(RvoptStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(RvoptStatus::NullArgument, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RvoptStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RvoptStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            RvoptStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Fail(RvoptStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn point_arg(x: *const f64, len: usize) -> Result<DVector<f64>, Fail> {
    if x.is_null() && len > 0 {
        return Err(null("point"));
    }
    if len == 0 {
        return Ok(DVector::zeros(0));
    }
    Ok(DVector::from_column_slice(std::slice::from_raw_parts(x, len)))
}

unsafe fn problem_arg<'a>(p: *const RvoptProblem) -> Result<&'a Problem, Fail> {
    p.as_ref().map(|p| &p.0).ok_or_else(|| null("problem"))
}

unsafe fn cert_arg<'a>(c: *const RvoptCertificate) -> Result<&'a Certificate, Fail> {
    c.as_ref().map(|c| &c.0).ok_or_else(|| null("certificate"))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .expect("interior nuls removed")
        .into_raw()
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn rvopt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn rvopt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses and validates a problem document.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn rvopt_problem_from_json(json: *const c_char, out: *mut *mut RvoptProblem) -> RvoptStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = rvopt::io::parse_problem(str_arg(json, "json")?)?;
        *out = Box::into_raw(Box::new(RvoptProblem(p)));
        Ok(())
    })
}

/// Loads and validates a problem document from a file.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn rvopt_problem_load(path: *const c_char, out: *mut *mut RvoptProblem) -> RvoptStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = str_arg(path, "path")?;
        let p = rvopt::io::load_problem(path).map_err(|e| match e {
            Error::Io(io) => Fail(RvoptStatus::Io, format!("{path}: {io}")),
            e => e.into(),
        })?;
        *out = Box::into_raw(Box::new(RvoptProblem(p)));
        Ok(())
    })
}

/// Releases a problem. Null is ignored.
///
/// # Safety
/// `problem` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rvopt_problem_free(problem: *mut RvoptProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Decision, objective and constraint dimensions.
///
/// # Safety
/// `problem` must be valid; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn rvopt_problem_dims(
    problem: *const RvoptProblem,
    n: *mut usize,
    m: *mut usize,
    p: *mut usize,
) -> RvoptStatus {
    guard(|| {
        let pr = problem_arg(problem)?;
        if n.is_null() || m.is_null() || p.is_null() {
            return Err(null("out"));
        }
        *n = pr.n();
        *m = pr.m();
        *p = pr.p();
        Ok(())
    })
}

/// Merit value at `x` (length `len`).
///
/// # Safety
/// `x` must point to `len` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rvopt_merit(
    problem: *const RvoptProblem,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> RvoptStatus {
    guard(|| {
        let pr = problem_arg(problem)?;
        let x = point_arg(x, len)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = pr.merit(&x)?;
        Ok(())
    })
}

/// Feasibility of `x`.
///
/// # Safety
/// `x` must point to `len` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rvopt_is_feasible(
    problem: *const RvoptProblem,
    x: *const f64,
    len: usize,
    out: *mut bool,
) -> RvoptStatus {
    guard(|| {
        let pr = problem_arg(problem)?;
        let x = point_arg(x, len)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = pr.is_feasible(&x)?;
        Ok(())
    })
}

/// Multiplier-rule certificate at `x` using the scenario fan (or the
/// document's fan override).
///
/// # Safety
/// `x` must point to `len` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rvopt_multiplier_certificate(
    problem: *const RvoptProblem,
    x: *const f64,
    len: usize,
    out: *mut *mut RvoptCertificate,
) -> RvoptStatus {
    guard(|| {
        let pr = problem_arg(problem)?;
        let x = point_arg(x, len)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let c = multiplier_certificate(pr, &x, &pr.fan())?;
        *out = Box::into_raw(Box::new(RvoptCertificate(c)));
        Ok(())
    })
}

/// # Safety
/// `cert` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rvopt_certificate_status(
    cert: *const RvoptCertificate,
    out: *mut RvoptCertificateStatus,
) -> RvoptStatus {
    guard(|| {
        let c = cert_arg(cert)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = match c.status {
            CertificateStatus::Holds => RvoptCertificateStatus::Holds,
            CertificateStatus::Violated { .. } => RvoptCertificateStatus::Violated,
            CertificateStatus::LpInfeasible => RvoptCertificateStatus::LpInfeasible,
            CertificateStatus::Inconclusive { .. } => RvoptCertificateStatus::Inconclusive,
        };
        Ok(())
    })
}

/// # Safety
/// `cert` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rvopt_certificate_residual(cert: *const RvoptCertificate, out: *mut f64) -> RvoptStatus {
    guard(|| {
        let c = cert_arg(cert)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = c.residual;
        Ok(())
    })
}

/// Copies the objective multiplier into `buf`. `len` receives its length
/// (0 when there is none). Fails with `BufferTooSmall` when `cap` is short;
/// `len` is set in that case too.
///
/// # Safety
/// `buf` must hold `cap` doubles (may be null when `cap` is 0); `len` writable.
#[no_mangle]
pub unsafe extern "C" fn rvopt_certificate_multiplier(
    cert: *const RvoptCertificate,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> RvoptStatus {
    guard(|| {
        let c = cert_arg(cert)?;
        if len.is_null() {
            return Err(null("len"));
        }
        let y = c.multiplier.as_deref().unwrap_or(&[]);
        *len = y.len();
        if y.len() > cap {
            return Err(Fail(
                RvoptStatus::BufferTooSmall,
                format!("buffer holds {cap} values, need {}", y.len()),
            ));
        }
        if !y.is_empty() {
            if buf.is_null() {
                return Err(null("buf"));
            }
            ptr::copy_nonoverlapping(y.as_ptr(), buf, y.len());
        }
        Ok(())
    })
}

/// Serializes a certificate. Release the string with `rvopt_string_free`.
///
/// # Safety
/// `cert` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rvopt_certificate_to_json(
    cert: *const RvoptCertificate,
    out: *mut *mut c_char,
) -> RvoptStatus {
    guard(|| {
        let c = cert_arg(cert)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = serde_json::to_string(c).map_err(|e| Fail(RvoptStatus::Numerical, e.to_string()))?;
        *out = into_c_string(s);
        Ok(())
    })
}

/// Releases a certificate. Null is ignored.
///
/// # Safety
/// `cert` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rvopt_certificate_free(cert: *mut RvoptCertificate) {
    if !cert.is_null() {
        drop(Box::from_raw(cert));
    }
}

/// Full analysis report at `x` as JSON, with default options and `seed`.
/// `verdict` receives the CLI exit code of the report (0, 2 or 3).
///
/// # Safety
/// `x` must point to `len` doubles; `out` and `verdict` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rvopt_report_json(
    problem: *const RvoptProblem,
    x: *const f64,
    len: usize,
    seed: u64,
    out: *mut *mut c_char,
    verdict: *mut i32,
) -> RvoptStatus {
    guard(|| {
        let pr = problem_arg(problem)?;
        let x = point_arg(x, len)?;
        if out.is_null() || verdict.is_null() {
            return Err(null("out"));
        }
        let r = run_report(pr, &x, &ReportOptions::with_seed(seed))?;
        *verdict = r.summary.verdict.exit_code();
        *out = into_c_string(r.to_json());
        Ok(())
    })
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rvopt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
