//! C ABI for the blochlab core: opaque expression handles, error codes, and
//! JSON-string pipeline runners, so other languages can bind without
//! re-implementing the numerics.
//!
//! Conventions:
//! - every function returns a status code from [`BlochlabStatus`];
//! - expression handles are opaque pointers created by the `*_parse`
//!   functions and released with `blochlab_expr_free`;
//! - strings returned through `char**` are NUL-terminated, UTF-8, allocated
//!   by this library, and must be released with `blochlab_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, c_double, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use blochlab::error::Error;
use blochlab::lab::{self, NonblochThresholds, SelectOpts, Theorem2Status, VerdictStatus};
use blochlab::parse::{expr_from_json, parse_expr};
use blochlab::seminorms::{self, ExecCtx, SeminormKind, SupProfile};
use blochlab::{DiscPoint, FunctionExpr, SCHEMA_VERSION};

/// Status codes mirroring the CLI exit contract.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlochlabStatus {
    Ok = 0,
    /// Unparseable input or invalid argument combination.
    InputError = 2,
    /// Input outside the mathematical domain or a numerical failure.
    DomainError = 3,
    /// A certificate pipeline ran but its verdict is FAIL.
    VerdictFail = 4,
    /// Null pointer handed where a value was required.
    NullPointer = 5,
    /// Unexpected internal failure.
    InternalError = 6,
}

/// Opaque expression handle.
pub struct BlochlabExpr {
    inner: FunctionExpr,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(msg).ok();
    });
}

fn status_of(e: &Error) -> BlochlabStatus {
    match e.exit_code() {
        2 => BlochlabStatus::InputError,
        _ => BlochlabStatus::DomainError,
    }
}

fn guard<F: FnOnce() -> BlochlabStatus>(f: F) -> BlochlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic".into());
            BlochlabStatus::InternalError
        }
    }
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, BlochlabStatus> {
    if ptr.is_null() {
        return Err(BlochlabStatus::NullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("input string is not UTF-8".into());
        BlochlabStatus::InputError
    })
}

fn give_string(s: String, out: *mut *mut c_char) -> BlochlabStatus {
    match CString::new(s) {
        Ok(cs) => {
            unsafe { *out = cs.into_raw() };
            BlochlabStatus::Ok
        }
        Err(_) => {
            set_error("output contained an interior NUL".into());
            BlochlabStatus::InternalError
        }
    }
}

fn point_from(gap_log: c_double, theta: c_double) -> Result<DiscPoint, BlochlabStatus> {
    DiscPoint::from_gap(gap_log, theta).map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

/// Copy the most recent error message for this thread into `buf`
/// (truncated to `len` bytes including the terminator). Returns the full
/// message length, or 0 when no error is stored.
///
/// # Safety
/// `buf` must point to at least `len` writable bytes, or be NULL (then only
/// the length is reported).
#[no_mangle]
pub unsafe extern "C" fn blochlab_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let slot = slot.borrow();
        let Some(msg) = slot.as_ref() else {
            return 0;
        };
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            // always terminate
            *buf.add(n - 1) = 0;
        }
        bytes.len()
    })
}

/// Parse the expression mini-language into an opaque handle.
///
/// # Safety
/// `src` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn blochlab_expr_parse(
    src: *const c_char,
    out: *mut *mut BlochlabExpr,
) -> BlochlabStatus {
    if out.is_null() {
        return BlochlabStatus::NullPointer;
    }
    guard(|| {
        let src = match read_str(src) {
            Ok(s) => s,
            Err(st) => return st,
        };
        match parse_expr(src) {
            Ok(e) => {
                *out = Box::into_raw(Box::new(BlochlabExpr { inner: e }));
                BlochlabStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Parse a JSON AST into an opaque handle.
///
/// # Safety
/// `src` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn blochlab_expr_parse_json(
    src: *const c_char,
    out: *mut *mut BlochlabExpr,
) -> BlochlabStatus {
    if out.is_null() {
        return BlochlabStatus::NullPointer;
    }
    guard(|| {
        let src = match read_str(src) {
            Ok(s) => s,
            Err(st) => return st,
        };
        match expr_from_json(src) {
            Ok(e) => {
                *out = Box::into_raw(Box::new(BlochlabExpr { inner: e }));
                BlochlabStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Release an expression handle. NULL is a no-op.
///
/// # Safety
/// `expr` must have come from one of the parse or deriv functions and not
/// have been freed already.
#[no_mangle]
pub unsafe extern "C" fn blochlab_expr_free(expr: *mut BlochlabExpr) {
    if !expr.is_null() {
        drop(Box::from_raw(expr));
    }
}

/// Exact symbolic derivative as a new handle.
///
/// # Safety
/// `expr` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn blochlab_expr_deriv(
    expr: *const BlochlabExpr,
    out: *mut *mut BlochlabExpr,
) -> BlochlabStatus {
    if expr.is_null() || out.is_null() {
        return BlochlabStatus::NullPointer;
    }
    guard(|| {
        let d = (*expr).inner.deriv();
        *out = Box::into_raw(Box::new(BlochlabExpr { inner: d }));
        BlochlabStatus::Ok
    })
}

/// Evaluate at the point with boundary gap `gap_log` and argument `theta`.
///
/// # Safety
/// `expr` must be a live handle; `out_re` and `out_im` must be valid.
#[no_mangle]
pub unsafe extern "C" fn blochlab_expr_eval(
    expr: *const BlochlabExpr,
    gap_log: c_double,
    theta: c_double,
    out_re: *mut c_double,
    out_im: *mut c_double,
) -> BlochlabStatus {
    if expr.is_null() || out_re.is_null() || out_im.is_null() {
        return BlochlabStatus::NullPointer;
    }
    guard(|| {
        let z = match point_from(gap_log, theta) {
            Ok(z) => z,
            Err(st) => return st,
        };
        let v = (*expr).inner.eval(&z);
        *out_re = v.re;
        *out_im = v.im;
        BlochlabStatus::Ok
    })
}

/// ln |f(z)|; -inf at zeros of f.
///
/// # Safety
/// `expr` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn blochlab_expr_log_modulus(
    expr: *const BlochlabExpr,
    gap_log: c_double,
    theta: c_double,
    out: *mut c_double,
) -> BlochlabStatus {
    if expr.is_null() || out.is_null() {
        return BlochlabStatus::NullPointer;
    }
    guard(|| {
        let z = match point_from(gap_log, theta) {
            Ok(z) => z,
            Err(st) => return st,
        };
        *out = (*expr).inner.log_modulus(&z);
        BlochlabStatus::Ok
    })
}

/// (1 - |z|^2) |f'(z)|, the Bloch quantity at one point.
///
/// # Safety
/// `expr` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn blochlab_bloch_quantity(
    expr: *const BlochlabExpr,
    gap_log: c_double,
    theta: c_double,
    out: *mut c_double,
) -> BlochlabStatus {
    if expr.is_null() || out.is_null() {
        return BlochlabStatus::NullPointer;
    }
    guard(|| {
        let z = match point_from(gap_log, theta) {
            Ok(z) => z,
            Err(st) => return st,
        };
        *out = seminorms::bloch_quantity(&(*expr).inner, &z);
        BlochlabStatus::Ok
    })
}

/// Seminorm kind selector for `blochlab_seminorm_json`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlochlabSeminorm {
    Bloch = 0,
    BlochLog = 1,
    Normal = 2,
}

/// Lower-bound seminorm estimate; the result is the JSON estimate document.
///
/// # Safety
/// `expr` must be a live handle; `out_json` must be valid. The returned
/// string must be freed with `blochlab_string_free`.
#[no_mangle]
pub unsafe extern "C" fn blochlab_seminorm_json(
    expr: *const BlochlabExpr,
    kind: BlochlabSeminorm,
    levels: u32,
    jobs: usize,
    out_json: *mut *mut c_char,
) -> BlochlabStatus {
    if expr.is_null() || out_json.is_null() {
        return BlochlabStatus::NullPointer;
    }
    guard(|| {
        let kind = match kind {
            BlochlabSeminorm::Bloch => SeminormKind::Bloch,
            BlochlabSeminorm::BlochLog => SeminormKind::Blog,
            BlochlabSeminorm::Normal => SeminormKind::Normal,
        };
        let run = || -> Result<String, Error> {
            let ctx = ExecCtx::new(jobs.max(1))?;
            let (est, _) = seminorms::seminorm_est(&(*expr).inner, kind, levels, &ctx)?;
            Ok(serde_json::to_string(&serde_json::json!({
                "schema": SCHEMA_VERSION,
                "kind": kind,
                "estimate": est,
            }))?)
        };
        match run() {
            Ok(s) => give_string(s, out_json),
            Err(e) => {
                set_error(e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Run the horocycle-versus-radius dichotomy; the result is the JSON report.
/// Returns `VerdictFail` when the report verdict is not PASS (the JSON is
/// still produced).
///
/// # Safety
/// `expr` may be NULL (then log(1/(1-z)) is used); `out_json` must be valid.
/// The returned string must be freed with `blochlab_string_free`.
#[no_mangle]
pub unsafe extern "C" fn blochlab_theorem2_json(
    expr: *const BlochlabExpr,
    c: c_double,
    a: c_double,
    depth: u32,
    jobs: usize,
    out_json: *mut *mut c_char,
) -> BlochlabStatus {
    if out_json.is_null() {
        return BlochlabStatus::NullPointer;
    }
    guard(|| {
        let f = if expr.is_null() {
            FunctionExpr::LogOneMinus
        } else {
            (*expr).inner.clone()
        };
        let run = || -> Result<(String, Theorem2Status), Error> {
            let ctx = ExecCtx::new(jobs.max(1))?;
            let report = lab::verify_theorem2(&f, c, a, depth, &ctx)?;
            let status = report.status;
            let body = serde_json::to_string(&serde_json::json!({
                "schema": SCHEMA_VERSION,
                "report": report,
            }))?;
            Ok((body, status))
        };
        match run() {
            Ok((s, status)) => {
                let st = give_string(s, out_json);
                if st != BlochlabStatus::Ok {
                    return st;
                }
                match status {
                    Theorem2Status::Pass => BlochlabStatus::Ok,
                    _ => BlochlabStatus::VerdictFail,
                }
            }
            Err(e) => {
                set_error(e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Run the radius-schedule construction; the result is the JSON report.
/// Returns `VerdictFail` when the verdict is not PASS (the JSON is still
/// produced).
///
/// # Safety
/// `expr` may be NULL (then log(1/(1-z)) is used); `out_json` must be valid.
/// The returned string must be freed with `blochlab_string_free`.
#[no_mangle]
pub unsafe extern "C" fn blochlab_theorem4_json(
    expr: *const BlochlabExpr,
    n: usize,
    r1_gap_log: c_double,
    margin: c_double,
    jobs: usize,
    out_json: *mut *mut c_char,
) -> BlochlabStatus {
    if out_json.is_null() {
        return BlochlabStatus::NullPointer;
    }
    guard(|| {
        let f = if expr.is_null() {
            FunctionExpr::LogOneMinus
        } else {
            (*expr).inner.clone()
        };
        let run = || -> Result<(String, VerdictStatus), Error> {
            let ctx = ExecCtx::new(jobs.max(1))?;
            let profile = if f.real_ray_maximal_hint() {
                SupProfile::RealRayMax
            } else {
                SupProfile::DenseScan
            };
            let opts = SelectOpts { margin, profile };
            let report = lab::build_counterexample(
                &f,
                n,
                r1_gap_log,
                &opts,
                &NonblochThresholds::default(),
                &ctx,
            )?;
            let status = report.verdict.status;
            let body = serde_json::to_string(&serde_json::json!({
                "schema": SCHEMA_VERSION,
                "report": report,
            }))?;
            Ok((body, status))
        };
        match run() {
            Ok((s, status)) => {
                let st = give_string(s, out_json);
                if st != BlochlabStatus::Ok {
                    return st;
                }
                match status {
                    VerdictStatus::Pass => BlochlabStatus::Ok,
                    _ => BlochlabStatus::VerdictFail,
                }
            }
            Err(e) => {
                set_error(e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Release a string returned by this library. NULL is a no-op.
///
/// # Safety
/// `s` must have been returned by a blochlab function and not freed yet.
#[no_mangle]
pub unsafe extern "C" fn blochlab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// ABI version of this header/library pair.
#[no_mangle]
pub extern "C" fn blochlab_abi_version() -> c_int {
    1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_eval_roundtrip_through_the_abi() {
        unsafe {
            let src = CString::new("product(inner(1), log1m())").unwrap();
            let mut h: *mut BlochlabExpr = ptr::null_mut();
            assert_eq!(blochlab_expr_parse(src.as_ptr(), &mut h), BlochlabStatus::Ok);
            let mut lm = 0.0;
            // radial point 1 - 1e-3: ln|F| = -1999 + ln ln 1000
            let gap = -(0.001f64).ln();
            assert_eq!(
                blochlab_expr_log_modulus(h, gap, 0.0, &mut lm),
                BlochlabStatus::Ok
            );
            let expect = -(2.0 - 0.001) / 0.001 + (1000f64.ln()).ln();
            assert!((lm - expect).abs() < 1e-9 * expect.abs());
            let (mut re, mut im) = (0.0, 0.0);
            assert_eq!(
                blochlab_expr_eval(h, 0.0, 0.0, &mut re, &mut im),
                BlochlabStatus::Ok
            );
            assert!(re.abs() < 1e-15 && im.abs() < 1e-15);
            blochlab_expr_free(h);
        }
    }

    #[test]
    fn error_paths_report_codes_and_messages() {
        unsafe {
            let src = CString::new("inner(-3)").unwrap();
            let mut h: *mut BlochlabExpr = ptr::null_mut();
            assert_eq!(
                blochlab_expr_parse(src.as_ptr(), &mut h),
                BlochlabStatus::InputError
            );
            let mut buf = [0i8; 128];
            let n = blochlab_last_error_message(buf.as_mut_ptr(), buf.len());
            assert!(n > 0);
            // bad point
            let good = CString::new("id()").unwrap();
            assert_eq!(blochlab_expr_parse(good.as_ptr(), &mut h), BlochlabStatus::Ok);
            let mut out = 0.0;
            assert_eq!(
                blochlab_expr_log_modulus(h, -1.0, 0.0, &mut out),
                BlochlabStatus::DomainError
            );
            blochlab_expr_free(h);
            assert_eq!(blochlab_expr_parse(ptr::null(), &mut h), BlochlabStatus::NullPointer);
        }
    }

    #[test]
    fn theorem_runners_emit_json() {
        unsafe {
            let mut s: *mut c_char = ptr::null_mut();
            let st = blochlab_theorem2_json(ptr::null(), 1.0, 0.5, 4, 1, &mut s);
            assert_eq!(st, BlochlabStatus::Ok);
            let body = CStr::from_ptr(s).to_str().unwrap();
            let v: serde_json::Value = serde_json::from_str(body).unwrap();
            assert_eq!(v["schema"], "v1");
            assert_eq!(v["report"]["status"], "pass");
            blochlab_string_free(s);

            let mut s4: *mut c_char = ptr::null_mut();
            let st = blochlab_theorem4_json(ptr::null(), 6, 1.0, 1.15, 1, &mut s4);
            assert_eq!(st, BlochlabStatus::Ok);
            let v: serde_json::Value =
                serde_json::from_str(CStr::from_ptr(s4).to_str().unwrap()).unwrap();
            assert_eq!(v["report"]["verdict"]["status"], "pass");
            blochlab_string_free(s4);
        }
    }

    #[test]
    fn seminorm_runner_matches_library() {
        unsafe {
            let src = CString::new("id()").unwrap();
            let mut h: *mut BlochlabExpr = ptr::null_mut();
            assert_eq!(blochlab_expr_parse(src.as_ptr(), &mut h), BlochlabStatus::Ok);
            let mut s: *mut c_char = ptr::null_mut();
            assert_eq!(
                blochlab_seminorm_json(h, BlochlabSeminorm::Bloch, 6, 1, &mut s),
                BlochlabStatus::Ok
            );
            let v: serde_json::Value =
                serde_json::from_str(CStr::from_ptr(s).to_str().unwrap()).unwrap();
            let value = v["estimate"]["value"].as_f64().unwrap();
            assert!((value - 1.0).abs() < 1e-12);
            blochlab_string_free(s);
            blochlab_expr_free(h);
        }
    }
}
