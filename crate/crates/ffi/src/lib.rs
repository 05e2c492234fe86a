//! C ABI over the exact aggregation library.
//!
//! Scenarios and rules live behind opaque handles. Rationals cross the
//! boundary as NUL-terminated `"p/q"` strings (decimals are accepted on
//! input and parsed exactly); `_f64` variants return rounded doubles.
//! Every call returns an [`RaStatus`]; on failure [`ra_last_error_message`]
//! describes the error. Strings returned through out-parameters are owned
//! by the caller and must be released with [`ra_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num::{BigRational, FromPrimitive};
use robust_agg::error::Error;
use robust_agg::evaluate::{approx_ratio, default_tolerance, minimax_value, worst_case_regret};
use robust_agg::model::{AggregationRule, Scenario};
use robust_agg::optimize::{optimal_regret_rule, two_agent_closed_form, verify_random_dictator};
use robust_agg::rational::{exact, parse_rational, to_f64, Q};

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidScenario = 4,
    InvalidRule = 5,
    SizeMismatch = 6,
    SizeCap = 7,
    Solver = 8,
    Panic = 9,
}

/// Opaque binary scenario.
pub struct RaScenario(Scenario);

/// Opaque aggregation rule.
pub struct RaRule(AggregationRule);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(RaStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Parse(_) => RaStatus::Parse,
            Error::InvalidRule(_) | Error::InvalidDistribution(_) => RaStatus::InvalidRule,
            Error::SizeMismatch { .. } => RaStatus::SizeMismatch,
            Error::SizeCap { .. } => RaStatus::SizeCap,
            Error::OrderingViolation { .. }
            | Error::PriorOutOfRange { .. }
            | Error::DegenerateScenario(_)
            | Error::InvalidAgentCount
            | Error::MeanOutOfRange(_)
            | Error::NoRegion { .. } => RaStatus::InvalidScenario,
            _ => RaStatus::Solver,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

/// Runs `body`, recording the error message and converting panics.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> RaStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            RaStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("panic inside robust-agg");
            RaStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(RaStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(RaStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn rational(p: *const c_char, what: &str) -> Result<Q, Failure> {
    Ok(parse_rational(text(p, what)?)?)
}

fn from_f64(v: f64, what: &str) -> Result<Q, Failure> {
    BigRational::from_f64(v).ok_or_else(|| Failure(RaStatus::Parse, format!("{what} is not finite")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

// Null is rejected before allocating so a failed call never leaks.
unsafe fn put_string(out: *mut *mut c_char, value: &Q, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    let s = CString::new(exact(value)).expect("rationals print without NUL");
    put(out, s.into_raw(), what)
}

unsafe fn put_box<T>(out: *mut *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    put(out, Box::into_raw(Box::new(value)), what)
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ra_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ra_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Scenario from prior `mu`, posteriors `p1 < 1/2 < p2` and `n` agents.
///
/// # Safety
/// String arguments must be valid NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ra_scenario_new(
    mu: *const c_char,
    p1: *const c_char,
    p2: *const c_char,
    n: usize,
    out: *mut *mut RaScenario,
) -> RaStatus {
    guard(|| {
        let s = Scenario::new(rational(mu, "mu")?, rational(p1, "p1")?, rational(p2, "p2")?, n)?;
        put_box(out, RaScenario(s), "out")
    })
}

/// Scenario from prior `mu` and the conditional means `a < b`.
///
/// # Safety
/// As [`ra_scenario_new`].
#[no_mangle]
pub unsafe extern "C" fn ra_scenario_from_conditionals(
    mu: *const c_char,
    a: *const c_char,
    b: *const c_char,
    n: usize,
    out: *mut *mut RaScenario,
) -> RaStatus {
    guard(|| {
        let s = Scenario::from_conditionals(rational(mu, "mu")?, rational(a, "a")?, rational(b, "b")?, n)?;
        put_box(out, RaScenario(s), "out")
    })
}

/// As [`ra_scenario_new`], taking the exact binary value of each double.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ra_scenario_new_f64(
    mu: f64,
    p1: f64,
    p2: f64,
    n: usize,
    out: *mut *mut RaScenario,
) -> RaStatus {
    guard(|| {
        let s = Scenario::new(from_f64(mu, "mu")?, from_f64(p1, "p1")?, from_f64(p2, "p2")?, n)?;
        put_box(out, RaScenario(s), "out")
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ra_scenario_free(s: *mut RaScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Agent count, or 0 for a null handle.
///
/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ra_scenario_n(s: *const RaScenario) -> usize {
    s.as_ref().map_or(0, |s| s.0.n())
}

/// Probability of a high signal in state 0 (`a`) and state 1 (`b`).
///
/// # Safety
/// `s` must be a live handle; `a` and `b` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ra_scenario_conditionals(
    s: *const RaScenario,
    a: *mut *mut c_char,
    b: *mut *mut c_char,
) -> RaStatus {
    guard(|| {
        let s = &handle(s, "scenario")?.0;
        if b.is_null() {
            return Err(null("b"));
        }
        put_string(a, s.a(), "a")?;
        put_string(b, s.b(), "b")
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ra_rule_identity(n: usize, out: *mut *mut RaRule) -> RaStatus {
    guard(|| put_box(out, RaRule(AggregationRule::identity(n)), "out"))
}

/// Deterministic rule guessing 1 iff the high fraction is at least `tau`.
///
/// # Safety
/// `tau` must be a valid string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ra_rule_threshold(n: usize, tau: *const c_char, out: *mut *mut RaRule) -> RaStatus {
    guard(|| {
        let tau = rational(tau, "tau")?;
        put_box(out, RaRule(AggregationRule::threshold(n, &tau)), "out")
    })
}

/// Rule with `values[k] = f(k/n)` for `k = 0..len`, so `n = len - 1`.
///
/// # Safety
/// `values` must point to `len` valid strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ra_rule_from_values(
    values: *const *const c_char,
    len: usize,
    out: *mut *mut RaRule,
) -> RaStatus {
    guard(|| {
        if values.is_null() {
            return Err(null("values"));
        }
        let parsed = std::slice::from_raw_parts(values, len)
            .iter()
            .map(|&p| rational(p, "value"))
            .collect::<Result<Vec<_>, _>>()?;
        put_box(out, RaRule(AggregationRule::new(parsed)?), "out")
    })
}

/// As [`ra_rule_from_values`], taking the exact binary value of each double.
///
/// # Safety
/// `values` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ra_rule_from_f64(values: *const f64, len: usize, out: *mut *mut RaRule) -> RaStatus {
    guard(|| {
        if values.is_null() {
            return Err(null("values"));
        }
        let parsed = std::slice::from_raw_parts(values, len)
            .iter()
            .map(|&v| from_f64(v, "value"))
            .collect::<Result<Vec<_>, _>>()?;
        put_box(out, RaRule(AggregationRule::new(parsed)?), "out")
    })
}

/// # Safety
/// `r` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ra_rule_free(r: *mut RaRule) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Agent count of the rule, or 0 for a null handle.
///
/// # Safety
/// `r` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ra_rule_n(r: *const RaRule) -> usize {
    r.as_ref().map_or(0, |r| r.0.n())
}

/// `f(k/n)`.
///
/// # Safety
/// `r` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ra_rule_value(r: *const RaRule, k: usize, out: *mut *mut c_char) -> RaStatus {
    guard(|| {
        let rule = &handle(r, "rule")?.0;
        let v = rule.values().get(k).ok_or(Failure(
            RaStatus::SizeMismatch,
            format!("index {k} outside 0..={}", rule.n()),
        ))?;
        put_string(out, v, "out")
    })
}

/// Worst-case regret of the rule over all information structures.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ra_worst_case_regret(
    s: *const RaScenario,
    r: *const RaRule,
    out: *mut *mut c_char,
) -> RaStatus {
    guard(|| {
        let (v, _) = worst_case_regret(&handle(r, "rule")?.0, &handle(s, "scenario")?.0)?;
        put_string(out, &v, "out")
    })
}

/// # Safety
/// As [`ra_worst_case_regret`].
#[no_mangle]
pub unsafe extern "C" fn ra_worst_case_regret_f64(s: *const RaScenario, r: *const RaRule, out: *mut f64) -> RaStatus {
    guard(|| {
        let (v, _) = worst_case_regret(&handle(r, "rule")?.0, &handle(s, "scenario")?.0)?;
        put(out, to_f64(&v), "out")
    })
}

/// Worst-case success probability of the rule.
///
/// # Safety
/// As [`ra_worst_case_regret`].
#[no_mangle]
pub unsafe extern "C" fn ra_minimax_value(s: *const RaScenario, r: *const RaRule, out: *mut *mut c_char) -> RaStatus {
    guard(|| {
        let v = minimax_value(&handle(r, "rule")?.0, &handle(s, "scenario")?.0)?;
        put_string(out, &v, "out")
    })
}

/// Approximation ratio to within `tol` below; a null `tol` means 1e-9.
///
/// # Safety
/// Handles must be live; `tol` null or a valid string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ra_approx_ratio(
    s: *const RaScenario,
    r: *const RaRule,
    tol: *const c_char,
    out: *mut *mut c_char,
) -> RaStatus {
    guard(|| {
        let tol = if tol.is_null() { default_tolerance() } else { rational(tol, "tol")? };
        let v = approx_ratio(&handle(r, "rule")?.0, &handle(s, "scenario")?.0, &tol)?;
        put_string(out, &v, "out")
    })
}

/// Regret-optimal rule and its regret. Either output may be null to skip it.
///
/// # Safety
/// `s` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ra_optimal_rule(
    s: *const RaScenario,
    rule_out: *mut *mut RaRule,
    regret_out: *mut *mut c_char,
) -> RaStatus {
    guard(|| {
        let opt = optimal_regret_rule(&handle(s, "scenario")?.0)?;
        if !regret_out.is_null() {
            put_string(regret_out, &opt.value, "regret_out")?;
        }
        if !rule_out.is_null() {
            put_box(rule_out, RaRule(opt.rule), "rule_out")?;
        }
        Ok(())
    })
}

/// Optimal regret as a double.
///
/// # Safety
/// `s` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ra_optimal_regret_f64(s: *const RaScenario, out: *mut f64) -> RaStatus {
    guard(|| {
        let opt = optimal_regret_rule(&handle(s, "scenario")?.0)?;
        put(out, to_f64(&opt.value), "out")
    })
}

/// Random-dictator check: whether the scenario is in the regime, whether
/// every asserted check held, and the optimal regret.
///
/// # Safety
/// `s` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ra_verify_dictator(
    s: *const RaScenario,
    in_region: *mut bool,
    passed: *mut bool,
    regret_out: *mut *mut c_char,
) -> RaStatus {
    guard(|| {
        if in_region.is_null() || passed.is_null() {
            return Err(null("flag output"));
        }
        let report = verify_random_dictator(&handle(s, "scenario")?.0)?;
        put_string(regret_out, &report.lp_value, "regret_out")?;
        put(in_region, report.in_region, "in_region")?;
        put(passed, report.passed(), "passed")
    })
}

/// Closed-form two-agent optimum under a uniform prior.
///
/// # Safety
/// Strings must be valid; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ra_two_agent(
    a: *const c_char,
    b: *const c_char,
    case_out: *mut u8,
    f_half_out: *mut *mut c_char,
    regret_out: *mut *mut c_char,
) -> RaStatus {
    guard(|| {
        if case_out.is_null() || f_half_out.is_null() || regret_out.is_null() {
            return Err(null("output"));
        }
        let c = two_agent_closed_form(&rational(a, "a")?, &rational(b, "b")?)?;
        put_string(f_half_out, &c.f_half, "f_half_out")?;
        put_string(regret_out, &c.regret, "regret_out")?;
        put(case_out, c.case, "case_out")
    })
}
