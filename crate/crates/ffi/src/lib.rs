//! C ABI for the rsa-lab library.
//!
//! Conventions: every function returns an [`RsaStatus`] code; results come
//! back through out-pointers. Problems are opaque handles created and
//! destroyed here. Strings returned by this library are NUL-terminated,
//! heap-allocated, and must be released with [`rsa_string_free`]. The last
//! error message of the calling thread is available via
//! [`rsa_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use rsa_lab::error::Error;
use rsa_lab::harness::{self, ExperimentConfig};
use rsa_lab::problems::{
    generate_nonlinear, generate_nonlinear_centered, generate_quadratic,
    generate_quadratic_centered, Composite, FiniteSumProblem,
};
use rsa_lab::rates;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Status codes. `Ok`, `BoundViolated`, `Infeasible`, and `Diverged` mirror
/// the CLI exit-code contract; the remainder are FFI-level failures.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsaStatus {
    Ok = 0,
    BoundViolated = 1,
    Infeasible = 2,
    Diverged = 3,
    InvalidArgument = 4,
    ParseError = 5,
    RuntimeError = 6,
    NullPointer = 7,
}

fn status_of(err: &Error) -> RsaStatus {
    match err {
        Error::Infeasible(_) => RsaStatus::Infeasible,
        Error::NonFinite(_) => RsaStatus::Diverged,
        Error::Parse(_) => RsaStatus::ParseError,
        Error::Parameter(_) | Error::Config(_) | Error::Shape(_) | Error::SizeBudget(_) => {
            RsaStatus::InvalidArgument
        }
        _ => RsaStatus::RuntimeError,
    }
}

fn fail(err: Error) -> RsaStatus {
    let code = status_of(&err);
    set_last_error(err.to_string());
    code
}

/// Opaque problem handle.
pub struct RsaProblem {
    inner: FiniteSumProblem,
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, RsaStatus> {
    if ptr.is_null() {
        set_last_error("null string argument".into());
        return Err(RsaStatus::NullPointer);
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|_| {
        set_last_error("string argument is not valid UTF-8".into());
        RsaStatus::InvalidArgument
    })
}

fn give_string(s: String, out: *mut *mut c_char) -> RsaStatus {
    let Ok(c) = CString::new(s) else {
        set_last_error("output contained an interior NUL".into());
        return RsaStatus::RuntimeError;
    };
    unsafe { *out = c.into_raw() };
    RsaStatus::Ok
}

/// Message describing the calling thread's most recent error, or NULL.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn rsa_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must have been returned by an `rsa_*` function and not freed before.
#[no_mangle]
pub unsafe extern "C" fn rsa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Generate a finite-sum quadratic instance (composite Zero).
///
/// # Safety
/// `out` must be a valid pointer to an `RsaProblem*` slot.
#[no_mangle]
pub unsafe extern "C" fn rsa_problem_generate_quadratic(
    d: usize,
    n: usize,
    c: f64,
    l: f64,
    seed: u64,
    centered: bool,
    out: *mut *mut RsaProblem,
) -> RsaStatus {
    if out.is_null() {
        return RsaStatus::NullPointer;
    }
    let built = if centered {
        generate_quadratic_centered(d, n, c, l, seed)
    } else {
        generate_quadratic(d, n, c, l, seed)
    };
    match built {
        Ok(p) => {
            unsafe { *out = Box::into_raw(Box::new(RsaProblem { inner: p })) };
            RsaStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Generate a strongly convex nonlinear finite sum.
/// `composite`: "none", "l1", or "half-squared-l2" (`lambda` ignored for none).
///
/// # Safety
/// `composite` must be a NUL-terminated string; `out` a valid slot.
#[no_mangle]
pub unsafe extern "C" fn rsa_problem_generate_nonlinear(
    d: usize,
    n: usize,
    c: f64,
    l: f64,
    composite: *const c_char,
    lambda: f64,
    seed: u64,
    centered: bool,
    out: *mut *mut RsaProblem,
) -> RsaStatus {
    if out.is_null() {
        return RsaStatus::NullPointer;
    }
    let composite = match unsafe { read_str(composite) } {
        Ok(s) => s,
        Err(code) => return code,
    };
    let composite = match composite {
        "none" => Composite::Zero,
        "l1" => Composite::L1 { lambda },
        "half-squared-l2" => Composite::HalfSquaredL2 { lambda },
        other => {
            set_last_error(format!("unknown composite `{other}`"));
            return RsaStatus::InvalidArgument;
        }
    };
    let built = if centered {
        generate_nonlinear_centered(d, n, c, l, composite, seed)
    } else {
        generate_nonlinear(d, n, c, l, composite, seed)
    };
    match built {
        Ok(p) => {
            unsafe { *out = Box::into_raw(Box::new(RsaProblem { inner: p })) };
            RsaStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Parse an instance from its JSON serialization.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` a valid slot.
#[no_mangle]
pub unsafe extern "C" fn rsa_problem_from_json(
    json: *const c_char,
    out: *mut *mut RsaProblem,
) -> RsaStatus {
    if out.is_null() {
        return RsaStatus::NullPointer;
    }
    let text = match unsafe { read_str(json) } {
        Ok(s) => s,
        Err(code) => return code,
    };
    match FiniteSumProblem::from_json(text) {
        Ok(p) => {
            unsafe { *out = Box::into_raw(Box::new(RsaProblem { inner: p })) };
            RsaStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Serialize an instance to JSON (hex-float reals).
///
/// # Safety
/// `problem` must be a live handle; `out` a valid slot.
#[no_mangle]
pub unsafe extern "C" fn rsa_problem_to_json(
    problem: *const RsaProblem,
    out: *mut *mut c_char,
) -> RsaStatus {
    if problem.is_null() || out.is_null() {
        return RsaStatus::NullPointer;
    }
    let p = unsafe { &*problem };
    give_string(p.inner.to_json(), out)
}

/// Destroy a problem handle.
///
/// # Safety
/// `problem` must have come from a generator here and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn rsa_problem_free(problem: *mut RsaProblem) {
    if !problem.is_null() {
        drop(unsafe { Box::from_raw(problem) });
    }
}

/// Problem dimension d.
///
/// # Safety
/// `problem` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rsa_problem_dim(problem: *const RsaProblem) -> usize {
    if problem.is_null() {
        return 0;
    }
    unsafe { &*problem }.inner.d
}

/// Number of component functions N.
///
/// # Safety
/// `problem` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rsa_problem_terms(problem: *const RsaProblem) -> usize {
    if problem.is_null() {
        return 0;
    }
    unsafe { &*problem }.inner.n()
}

unsafe fn read_vec(
    problem: &FiniteSumProblem,
    x: *const f64,
    len: usize,
) -> Result<rsa_lab::nalgebra::DVector<f64>, RsaStatus> {
    if x.is_null() {
        set_last_error("null vector argument".into());
        return Err(RsaStatus::NullPointer);
    }
    if len != problem.d {
        set_last_error(format!("vector length {len} does not match d = {}", problem.d));
        return Err(RsaStatus::InvalidArgument);
    }
    let slice = unsafe { std::slice::from_raw_parts(x, len) };
    Ok(rsa_lab::nalgebra::DVector::from_row_slice(slice))
}

/// Full objective `psi(x) = f(x) + g(x)`.
///
/// # Safety
/// `x` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rsa_problem_objective(
    problem: *const RsaProblem,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> RsaStatus {
    if problem.is_null() || out.is_null() {
        return RsaStatus::NullPointer;
    }
    let p = unsafe { &*problem };
    let v = match unsafe { read_vec(&p.inner, x, len) } {
        Ok(v) => v,
        Err(code) => return code,
    };
    unsafe { *out = p.inner.psi(&v) };
    RsaStatus::Ok
}

/// Full smooth gradient `grad f(x)` written into `out` (`len` doubles).
///
/// # Safety
/// `x` and `out` must point to `len` readable/writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rsa_problem_gradient(
    problem: *const RsaProblem,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> RsaStatus {
    if problem.is_null() || out.is_null() {
        return RsaStatus::NullPointer;
    }
    let p = unsafe { &*problem };
    let v = match unsafe { read_vec(&p.inner, x, len) } {
        Ok(v) => v,
        Err(code) => return code,
    };
    let g = p.inner.full_grad_fast(&v);
    unsafe { std::slice::from_raw_parts_mut(out, len) }.copy_from_slice(g.as_slice());
    RsaStatus::Ok
}

/// Certified optimizer written into `out` (`len = d` doubles).
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rsa_problem_optimizer(
    problem: *const RsaProblem,
    out: *mut f64,
    len: usize,
) -> RsaStatus {
    if problem.is_null() || out.is_null() {
        return RsaStatus::NullPointer;
    }
    let p = unsafe { &*problem };
    if len != p.inner.d {
        set_last_error(format!("buffer length {len} does not match d = {}", p.inner.d));
        return RsaStatus::InvalidArgument;
    }
    unsafe { std::slice::from_raw_parts_mut(out, len) }
        .copy_from_slice(p.inner.optimizer.x_star.as_slice());
    RsaStatus::Ok
}

/// `gamma(eta) = 1 - 2 eta c + eta^2 L^2`; `Infeasible` when `gamma >= 1`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rsa_rate_gamma(eta: f64, c: f64, l: f64, out: *mut f64) -> RsaStatus {
    if out.is_null() {
        return RsaStatus::NullPointer;
    }
    let cert = rates::gamma_certificate(eta, c, l);
    unsafe { *out = cert.alpha };
    if cert.feasible {
        RsaStatus::Ok
    } else {
        set_last_error("gamma(eta) >= 1: no contraction at this step size".into());
        RsaStatus::Infeasible
    }
}

/// SAGA coefficient `max{gamma + b L^2, (eta^2/b + N - 1)/N}`; writes the
/// value and reports feasibility of the printed conditions.
///
/// # Safety
/// `out_alpha` and `out_feasible` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rsa_rate_saga(
    eta: f64,
    b: f64,
    n: usize,
    c: f64,
    l: f64,
    out_alpha: *mut f64,
    out_feasible: *mut bool,
) -> RsaStatus {
    if out_alpha.is_null() || out_feasible.is_null() {
        return RsaStatus::NullPointer;
    }
    let cert = rates::saga_alpha(eta, b, n, c, l);
    unsafe {
        *out_alpha = cert.alpha;
        *out_feasible = cert.feasible;
    }
    if cert.feasible {
        RsaStatus::Ok
    } else {
        set_last_error("SAGA rate conditions violated".into());
        RsaStatus::Infeasible
    }
}

/// Rate certificate as JSON, routed by algorithm name with a JSON parameter
/// object, mirroring `rsa-lab rate`. Example:
/// `rsa_rate_json("saga", "{\"eta\":0.1,\"b\":0.02,\"n\":10,\"c\":1,\"l\":2}", &out)`.
///
/// # Safety
/// `algo` and `params_json` must be NUL-terminated strings; `out` a valid slot.
#[no_mangle]
pub unsafe extern "C" fn rsa_rate_json(
    algo: *const c_char,
    params_json: *const c_char,
    out: *mut *mut c_char,
) -> RsaStatus {
    if out.is_null() {
        return RsaStatus::NullPointer;
    }
    let algo = match unsafe { read_str(algo) } {
        Ok(s) => s,
        Err(code) => return code,
    };
    let params = match unsafe { read_str(params_json) } {
        Ok(s) => s,
        Err(code) => return code,
    };
    let value: serde_json::Value = match serde_json::from_str(params) {
        Ok(v) => v,
        Err(e) => {
            set_last_error(format!("parameter JSON: {e}"));
            return RsaStatus::ParseError;
        }
    };
    let get = |key: &str| -> Result<f64, RsaStatus> {
        value.get(key).and_then(|v| v.as_f64()).ok_or_else(|| {
            set_last_error(format!("missing numeric parameter `{key}`"));
            RsaStatus::InvalidArgument
        })
    };
    let get_usize = |key: &str| -> Result<usize, RsaStatus> {
        value.get(key).and_then(|v| v.as_u64()).map(|v| v as usize).ok_or_else(|| {
            set_last_error(format!("missing integer parameter `{key}`"));
            RsaStatus::InvalidArgument
        })
    };
    let cert = match algo {
        "sgd" | "sgd-oracle" | "sgd-prox" => match (get("eta"), get("c"), get("l")) {
            (Ok(eta), Ok(c), Ok(l)) => rates::gamma_certificate(eta, c, l),
            _ => return RsaStatus::InvalidArgument,
        },
        "saga" => match (get("eta"), get("b"), get_usize("n"), get("c"), get("l")) {
            (Ok(eta), Ok(b), Ok(n), Ok(c), Ok(l)) => rates::saga_alpha(eta, b, n, c, l),
            _ => return RsaStatus::InvalidArgument,
        },
        "svrg-quadratic" => match (get("eta"), get("c"), get("l"), get_usize("n")) {
            (Ok(eta), Ok(c), Ok(l), Ok(n)) => rates::svrg_alpha_quadratic(eta, c, l, n),
            _ => return RsaStatus::InvalidArgument,
        },
        "asvrg" => match (get("eta"), get("theta"), get_usize("m"), get("c")) {
            (Ok(eta), Ok(theta), Ok(m), Ok(c)) => rates::asvrg_alpha(eta, theta, m, c),
            _ => return RsaStatus::InvalidArgument,
        },
        "hsag" => match (
            get("eta"),
            get("b"),
            get_usize("n"),
            get_usize("s_size"),
            get("c"),
            get("l"),
            get_usize("m"),
        ) {
            (Ok(eta), Ok(b), Ok(n), Ok(s), Ok(c), Ok(l), Ok(m)) => {
                match rates::hsag_rates(eta, b, n, s, c, l, m) {
                    Ok(cert) => cert,
                    Err(e) => return fail(e),
                }
            }
            _ => return RsaStatus::InvalidArgument,
        },
        other => {
            set_last_error(format!("unknown rate algorithm `{other}`"));
            return RsaStatus::InvalidArgument;
        }
    };
    let feasible = cert.feasible;
    let json = match serde_json::to_string_pretty(&cert) {
        Ok(j) => j,
        Err(e) => {
            set_last_error(format!("serialization: {e}"));
            return RsaStatus::RuntimeError;
        }
    };
    let code = give_string(json, out);
    if code != RsaStatus::Ok {
        return code;
    }
    if feasible {
        RsaStatus::Ok
    } else {
        set_last_error("rate conditions violated".into());
        RsaStatus::Infeasible
    }
}

/// Exact Wasserstein divergence between two measure JSON documents
/// (`{"atoms": [...], "weights": [...]}`) under the squared Euclidean
/// divergence.
///
/// # Safety
/// `mu_json` and `nu_json` must be NUL-terminated strings; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rsa_wasserstein_exact(
    mu_json: *const c_char,
    nu_json: *const c_char,
    out: *mut f64,
) -> RsaStatus {
    if out.is_null() {
        return RsaStatus::NullPointer;
    }
    let mu = match unsafe { read_str(mu_json) } {
        Ok(s) => s,
        Err(code) => return code,
    };
    let nu = match unsafe { read_str(nu_json) } {
        Ok(s) => s,
        Err(code) => return code,
    };
    let parse = |text: &str| -> Result<rsa_lab::wasserstein::DiscreteMeasure, RsaStatus> {
        serde_json::from_str(text).map_err(|e| {
            set_last_error(format!("measure JSON: {e}"));
            RsaStatus::ParseError
        })
    };
    let mu = match parse(mu) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let nu = match parse(nu) {
        Ok(m) => m,
        Err(code) => return code,
    };
    match rsa_lab::wasserstein::wv_exact(
        &mu,
        &nu,
        &rsa_lab::divergence::DivergenceSpec::SquaredEuclidean,
    ) {
        Ok((value, _)) => {
            unsafe { *out = value };
            RsaStatus::Ok
        }
        Err(e) => fail(e),
    }
}

fn exit_code_status(code: i32) -> RsaStatus {
    match code {
        harness::EXIT_PASS => RsaStatus::Ok,
        harness::EXIT_BOUND_VIOLATED => RsaStatus::BoundViolated,
        harness::EXIT_DIVERGED => RsaStatus::Diverged,
        _ => RsaStatus::Infeasible,
    }
}

/// Run the bound-verification protocol for a config file; the report JSON is
/// returned and the status mirrors the CLI exit code (0 pass,
/// 1 bound violated, 2 infeasible/invalid, 3 divergence budget exceeded).
///
/// # Safety
/// `config_path` must be a NUL-terminated path; `out_report` a valid slot.
#[no_mangle]
pub unsafe extern "C" fn rsa_verify_file(
    config_path: *const c_char,
    out_report: *mut *mut c_char,
) -> RsaStatus {
    if out_report.is_null() {
        return RsaStatus::NullPointer;
    }
    let path = match unsafe { read_str(config_path) } {
        Ok(s) => s,
        Err(code) => return code,
    };
    let path = Path::new(path);
    let cfg = match ExperimentConfig::from_path(path) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    match harness::verify_experiment(&cfg, base) {
        Ok((_, report)) => {
            let json = match harness::to_output_json(&report, false) {
                Ok(j) => j,
                Err(e) => return fail(e),
            };
            let code = give_string(json, out_report);
            if code != RsaStatus::Ok {
                return code;
            }
            exit_code_status(report.exit_code)
        }
        Err(e) => fail(e),
    }
}
