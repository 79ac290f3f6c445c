//! C ABI for the `hlpweak` library.
//!
//! Radial functions cross the boundary as opaque [`HlpRadialFunction`]
//! handles built from the text format (`piece [lo,hi): c*r^a + ...`). Every
//! fallible call returns an [`HlpStatus`] and writes its result through an out
//! pointer; on failure [`hlp_last_error_message`] describes what went wrong on
//! the calling thread. Panics are caught and reported as [`HlpStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hlpweak::constants::{kernel_constant_m, thm21_constant, thm22_constant, thm31_bound};
use hlpweak::norms::{strong_norm, weak_norm};
use hlpweak::operators::{apply_hlp, apply_hlp_symbolic, KernelForm, RadialKernel};
use hlpweak::quad::QuadratureConfig;
use hlpweak::radialfn::PiecewisePowerLog;
use hlpweak::spaces::unit_sphere_area;
use hlpweak::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HlpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Domain = 4,
    Divergence = 5,
    UnsupportedShape = 6,
    Evaluation = 7,
    UnboundedNorm = 8,
    InfiniteKernelConstant = 9,
    SingularDenominator = 10,
    NonConvergence = 11,
    Panic = 12,
}

impl From<&Error> for HlpStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) => HlpStatus::Domain,
            Error::Divergence(_) => HlpStatus::Divergence,
            Error::UnsupportedShape(_) => HlpStatus::UnsupportedShape,
            Error::Evaluation { .. } => HlpStatus::Evaluation,
            Error::UnboundedNorm(_) => HlpStatus::UnboundedNorm,
            Error::InfiniteKernelConstant(_) => HlpStatus::InfiniteKernelConstant,
            Error::SingularDenominator(_) => HlpStatus::SingularDenominator,
            Error::NonConvergence(_) => HlpStatus::NonConvergence,
            Error::Parse(_) => HlpStatus::Parse,
        }
    }
}

/// Opaque piecewise power-log radial function.
pub struct HlpRadialFunction(PiecewisePowerLog);

struct Failure {
    status: HlpStatus,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            status: HlpStatus::from(&e),
            message: e.to_string(),
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> HlpStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => HlpStatus::Ok,
        Ok(Err(f)) => {
            set_last_error(&f.message);
            f.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| (*s).to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_last_error(&format!("panic: {msg}"));
            HlpStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure {
        status: HlpStatus::NullPointer,
        message: format!("{what} is null"),
    }
}

unsafe fn func<'a>(f: *const HlpRadialFunction) -> Result<&'a PiecewisePowerLog, Failure> {
    f.as_ref().map(|h| &h.0).ok_or_else(|| null("function handle"))
}

unsafe fn c_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|e| Failure {
        status: HlpStatus::InvalidUtf8,
        message: format!("{what} is not UTF-8: {e}"),
    })
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

fn config(rel_tol: f64) -> Result<QuadratureConfig, Failure> {
    let cfg = QuadratureConfig::default().with_rel_tol(rel_tol);
    cfg.validate()?;
    Ok(cfg)
}

fn kernel(name: *const c_char, arity: usize, n: u32) -> Result<RadialKernel, Failure> {
    let form = KernelForm::parse(unsafe { c_str(name, "kernel name")? })?;
    Ok(RadialKernel::new(arity, form, n)?)
}

/// Message for the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call into this library on the same
/// thread.
#[no_mangle]
pub extern "C" fn hlp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hlp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a radial function; free the handle with [`hlp_radial_free`].
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn hlp_radial_parse(
    text: *const c_char,
    out: *mut *mut HlpRadialFunction,
) -> HlpStatus {
    guard(|| {
        let f: PiecewisePowerLog = c_str(text, "text")?.parse()?;
        write(out, Box::into_raw(Box::new(HlpRadialFunction(f))))
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `f` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn hlp_radial_free(f: *mut HlpRadialFunction) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Canonical text of a function; free it with [`hlp_string_free`].
///
/// # Safety
/// `f` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn hlp_radial_to_string(
    f: *const HlpRadialFunction,
    out: *mut *mut c_char,
) -> HlpStatus {
    guard(|| {
        let s = CString::new(func(f)?.to_string()).map_err(|e| Failure {
            status: HlpStatus::InvalidUtf8,
            message: e.to_string(),
        })?;
        write(out, s.into_raw())
    })
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn hlp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `f(r)` for `r > 0`.
///
/// # Safety
/// `f` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn hlp_radial_evaluate(
    f: *const HlpRadialFunction,
    r: f64,
    out: *mut f64,
) -> HlpStatus {
    guard(|| write(out, func(f)?.evaluate(r)?))
}

/// HLP operator of `f` in dimension `n`, evaluated at `r`.
///
/// # Safety
/// `f` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn hlp_apply_hlp(
    f: *const HlpRadialFunction,
    n: u32,
    r: f64,
    out: *mut f64,
) -> HlpStatus {
    guard(|| write(out, apply_hlp(func(f)?, n, r)?))
}

/// Closed-form HLP image of `f` as a new handle.
///
/// # Safety
/// `f` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn hlp_apply_hlp_symbolic(
    f: *const HlpRadialFunction,
    n: u32,
    out: *mut *mut HlpRadialFunction,
) -> HlpStatus {
    guard(|| {
        let img = apply_hlp_symbolic(func(f)?, n)?;
        write(out, Box::into_raw(Box::new(HlpRadialFunction(img))))
    })
}

/// `||f||` in `L^p(|x|^beta dx)` on `R^n`.
///
/// # Safety
/// `f` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn hlp_strong_norm(
    f: *const HlpRadialFunction,
    p: f64,
    beta: f64,
    n: u32,
    out: *mut f64,
) -> HlpStatus {
    guard(|| write(out, strong_norm(func(f)?, p, beta, n)?))
}

/// `||g||` in `L^{q,inf}(|x|^gamma dx)` on `R^n`.
///
/// # Safety
/// `g` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn hlp_weak_norm(
    g: *const HlpRadialFunction,
    q: f64,
    gamma: f64,
    n: u32,
    out: *mut f64,
) -> HlpStatus {
    guard(|| write(out, weak_norm(func(g)?, q, gamma, n)?))
}

/// Surface area of the unit sphere in `R^n`.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn hlp_unit_sphere_area(n: u32, out: *mut f64) -> HlpStatus {
    guard(|| write(out, unit_sphere_area(n)?))
}

/// Both printed variants of the weighted `L^p -> L^{q,inf}` constant, plus
/// whether they disagree. Null out pointers are skipped.
///
/// # Safety
/// Each out pointer must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn hlp_thm21_constants(
    p: f64,
    q: f64,
    beta: f64,
    gamma: f64,
    n: u32,
    statement: *mut f64,
    proof_variant: *mut f64,
    discrepancy: *mut bool,
) -> HlpStatus {
    guard(|| {
        let c = thm21_constant(p, q, beta, gamma, n)?;
        if !statement.is_null() {
            statement.write(c.statement.value);
        }
        if !proof_variant.is_null() {
            proof_variant.write(c.proof_variant.value);
        }
        if !discrepancy.is_null() {
            discrepancy.write(c.discrepancy);
        }
        Ok(())
    })
}

/// Sharp `L^1 -> L^{(n+gamma)/n, inf}(|x|^gamma)` constant.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn hlp_thm22_constant(gamma: f64, n: u32, out: *mut f64) -> HlpStatus {
    guard(|| write(out, thm22_constant(gamma, n)?.value))
}

/// Nested kernel constant `M` for an `arity`-linear kernel (`hardy`, `hlp`
/// or `hilbert`); `ps` and `betas` hold `arity` entries each.
///
/// # Safety
/// `kernel_name` must be NUL-terminated, `ps` and `betas` must point to
/// `arity` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hlp_kernel_constant(
    kernel_name: *const c_char,
    arity: usize,
    n: u32,
    ps: *const f64,
    betas: *const f64,
    rel_tol: f64,
    out: *mut f64,
) -> HlpStatus {
    guard(|| {
        let k = kernel(kernel_name, arity, n)?;
        let ps = slice(ps, arity, "ps")?;
        let betas = slice(betas, arity, "betas")?;
        write(out, kernel_constant_m(&k, betas, ps, &config(rel_tol)?)?.value)
    })
}

/// Weak-type bound `(w_n/(n+gamma))^{1/q} M` for an `arity`-linear kernel.
///
/// # Safety
/// As [`hlp_kernel_constant`].
#[no_mangle]
pub unsafe extern "C" fn hlp_kernel_bound(
    kernel_name: *const c_char,
    arity: usize,
    n: u32,
    ps: *const f64,
    betas: *const f64,
    q: f64,
    gamma: f64,
    rel_tol: f64,
    out: *mut f64,
) -> HlpStatus {
    guard(|| {
        let k = kernel(kernel_name, arity, n)?;
        let ps = slice(ps, arity, "ps")?;
        let betas = slice(betas, arity, "betas")?;
        write(
            out,
            thm31_bound(&k, betas, ps, q, gamma, &config(rel_tol)?)?.value,
        )
    })
}
