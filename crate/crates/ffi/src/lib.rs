//! C ABI for qdopt.
//!
//! Every fallible function returns a [`QdoptStatus`]. On failure the message is
//! available from [`qdopt_last_error`] on the same thread until the next call.
//! Handles are opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qdopt::bip::tunneling_probability;
use qdopt::harness::run_trial;
use qdopt::optimizer::TrialOutcome;
use qdopt::{Algorithm, AlgorithmConfig, BudgetedObjective, Error, ObjectiveSpec, Silent};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QdoptStatus {
    Ok = 0,
    InvalidArgument = 1,
    BudgetExhausted = 2,
    DimensionMismatch = 3,
    Io = 4,
    NullPointer = 5,
    Panic = 6,
}

/// A benchmark function with an evaluation budget.
pub struct QdoptObjective {
    inner: BudgetedObjective,
}

/// The result of one optimization trial.
pub struct QdoptOutcome {
    inner: TrialOutcome,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> QdoptStatus {
    match err {
        Error::InvalidArgument(_) => QdoptStatus::InvalidArgument,
        Error::BudgetExhausted { .. } => QdoptStatus::BudgetExhausted,
        Error::DimensionMismatch { .. } => QdoptStatus::DimensionMismatch,
        Error::Io(_) | Error::Csv(_) => QdoptStatus::Io,
        Error::Json(_) => QdoptStatus::InvalidArgument,
    }
}

struct Failure(QdoptStatus, String);

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Failure(status_of(&err), err.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(QdoptStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> QdoptStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QdoptStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            QdoptStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(QdoptStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn qdopt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qdopt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// `min(1, amplitude * exp(-delta_x * sqrt(delta_f) / gamma))`.
///
/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn qdopt_tunneling_probability(
    delta_f: f64,
    delta_x: f64,
    gamma: f64,
    amplitude: f64,
    out: *mut f64,
) -> QdoptStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = tunneling_probability(delta_f, delta_x, gamma, amplitude)?;
        Ok(())
    })
}

/// Creates an objective for `function` ("F1".."F12", "double_well", "paraboloid").
///
/// # Safety
/// `function` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qdopt_objective_new(
    function: *const c_char,
    dim: usize,
    max_fes: u64,
    out: *mut *mut QdoptObjective,
) -> QdoptStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let spec = ObjectiveSpec::from_id(str_arg(function, "function")?, dim)?;
        *out = Box::into_raw(Box::new(QdoptObjective { inner: BudgetedObjective::new(spec, max_fes) }));
        Ok(())
    })
}

/// Evaluates `x` (length `len`), spending one unit of budget.
///
/// # Safety
/// `objective` must come from `qdopt_objective_new`, `x` must point to `len`
/// doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qdopt_objective_evaluate(
    objective: *mut QdoptObjective,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> QdoptStatus {
    guard(|| {
        let objective = out_arg(objective, "objective")?;
        let out = out_arg(out, "out")?;
        *out = objective.inner.evaluate(slice_arg(x, len, "x")?)?;
        Ok(())
    })
}

/// Evaluations spent so far, or 0 for a null handle.
///
/// # Safety
/// `objective` must be null or come from `qdopt_objective_new`.
#[no_mangle]
pub unsafe extern "C" fn qdopt_objective_evals_used(objective: *const QdoptObjective) -> u64 {
    objective.as_ref().map_or(0, |o| o.inner.evals_used())
}

/// Dimension of the objective, or 0 for a null handle.
///
/// # Safety
/// `objective` must be null or come from `qdopt_objective_new`.
#[no_mangle]
pub unsafe extern "C" fn qdopt_objective_dim(objective: *const QdoptObjective) -> usize {
    objective.as_ref().map_or(0, |o| o.inner.spec().dim())
}

/// Best error `f(x_best) - f(x*)` so far, or `+inf` before any evaluation.
///
/// # Safety
/// `objective` must be null or come from `qdopt_objective_new`.
#[no_mangle]
pub unsafe extern "C" fn qdopt_objective_best_error(objective: *const QdoptObjective) -> f64 {
    objective.as_ref().and_then(|o| o.inner.best_error()).unwrap_or(f64::INFINITY)
}

/// Releases an objective. Null is ignored.
///
/// # Safety
/// `objective` must be null or come from `qdopt_objective_new`, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qdopt_objective_free(objective: *mut QdoptObjective) {
    if !objective.is_null() {
        drop(Box::from_raw(objective));
    }
}

unsafe fn finish_run(
    config: AlgorithmConfig,
    function: *const c_char,
    dim: usize,
    max_fes: u64,
    out: *mut *mut QdoptOutcome,
) -> Result<(), Failure> {
    let out = out_arg(out, "out")?;
    let spec = ObjectiveSpec::from_id(str_arg(function, "function")?, dim)?;
    config.validate()?;
    let inner = run_trial(&config, &spec, max_fes, &mut Silent)?;
    *out = Box::into_raw(Box::new(QdoptOutcome { inner }));
    Ok(())
}

/// Runs one trial of `algorithm` ("bip", "bbpso", "bbfwa", "gbde") with default settings.
///
/// # Safety
/// `algorithm` and `function` must be NUL-terminated strings and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qdopt_run(
    algorithm: *const c_char,
    function: *const c_char,
    dim: usize,
    max_fes: u64,
    seed: u64,
    out: *mut *mut QdoptOutcome,
) -> QdoptStatus {
    guard(|| {
        let algorithm: Algorithm = str_arg(algorithm, "algorithm")?.parse()?;
        let config = AlgorithmConfig::default_for(algorithm).with_seed(seed);
        finish_run(config, function, dim, max_fes, out)
    })
}

/// Runs one trial from a JSON algorithm config, in the form printed under
/// `"config"` by `qdopt run --dump-config`.
///
/// # Safety
/// `config_json` and `function` must be NUL-terminated strings and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qdopt_run_json(
    config_json: *const c_char,
    function: *const c_char,
    dim: usize,
    max_fes: u64,
    out: *mut *mut QdoptOutcome,
) -> QdoptStatus {
    guard(|| {
        let config: AlgorithmConfig =
            serde_json::from_str(str_arg(config_json, "config_json")?).map_err(Error::from)?;
        finish_run(config, function, dim, max_fes, out)
    })
}

/// Final error of the trial, or NaN for a null handle.
///
/// # Safety
/// `outcome` must be null or come from `qdopt_run`/`qdopt_run_json`.
#[no_mangle]
pub unsafe extern "C" fn qdopt_outcome_final_error(outcome: *const QdoptOutcome) -> f64 {
    outcome.as_ref().map_or(f64::NAN, |o| o.inner.final_error)
}

/// Evaluations the trial spent, or 0 for a null handle.
///
/// # Safety
/// `outcome` must be null or come from `qdopt_run`/`qdopt_run_json`.
#[no_mangle]
pub unsafe extern "C" fn qdopt_outcome_evals_used(outcome: *const QdoptOutcome) -> u64 {
    outcome.as_ref().map_or(0, |o| o.inner.evals_used)
}

/// Whether the final error reached the success threshold.
///
/// # Safety
/// `outcome` must be null or come from `qdopt_run`/`qdopt_run_json`.
#[no_mangle]
pub unsafe extern "C" fn qdopt_outcome_succeeded(outcome: *const QdoptOutcome) -> bool {
    outcome.as_ref().is_some_and(|o| o.inner.succeeded)
}

/// Copies the best position into `buf` (capacity `len`, at least the dimension).
///
/// # Safety
/// `outcome` must come from `qdopt_run`/`qdopt_run_json` and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qdopt_outcome_best_position(
    outcome: *const QdoptOutcome,
    buf: *mut f64,
    len: usize,
) -> QdoptStatus {
    guard(|| {
        let outcome = outcome.as_ref().ok_or_else(|| null("outcome"))?;
        let best = outcome.inner.best_position.as_deref().ok_or_else(|| {
            Failure(QdoptStatus::BudgetExhausted, "the trial made no evaluation".into())
        })?;
        if len < best.len() {
            return Err(Error::DimensionMismatch { expected: best.len(), got: len }.into());
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        std::slice::from_raw_parts_mut(buf, best.len()).copy_from_slice(best);
        Ok(())
    })
}

/// Number of points in the best-error trace, or 0 for a null handle.
///
/// # Safety
/// `outcome` must be null or come from `qdopt_run`/`qdopt_run_json`.
#[no_mangle]
pub unsafe extern "C" fn qdopt_outcome_trace_len(outcome: *const QdoptOutcome) -> usize {
    outcome.as_ref().map_or(0, |o| o.inner.error_trace.len())
}

/// Copies the best-error trace into `evals` and `errors`, each with capacity `len`.
///
/// # Safety
/// `outcome` must come from `qdopt_run`/`qdopt_run_json`; `evals` and `errors`
/// must each hold `len` elements.
#[no_mangle]
pub unsafe extern "C" fn qdopt_outcome_trace(
    outcome: *const QdoptOutcome,
    evals: *mut u64,
    errors: *mut f64,
    len: usize,
) -> QdoptStatus {
    guard(|| {
        let outcome = outcome.as_ref().ok_or_else(|| null("outcome"))?;
        let trace = &outcome.inner.error_trace;
        if len < trace.len() {
            return Err(Error::DimensionMismatch { expected: trace.len(), got: len }.into());
        }
        if evals.is_null() || errors.is_null() {
            return Err(null("trace buffer"));
        }
        let evals = std::slice::from_raw_parts_mut(evals, trace.len());
        let errors = std::slice::from_raw_parts_mut(errors, trace.len());
        for (i, &(e, err)) in trace.iter().enumerate() {
            evals[i] = e;
            errors[i] = err;
        }
        Ok(())
    })
}

/// Releases an outcome. Null is ignored.
///
/// # Safety
/// `outcome` must be null or come from `qdopt_run`/`qdopt_run_json`, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qdopt_outcome_free(outcome: *mut QdoptOutcome) {
    if !outcome.is_null() {
        drop(Box::from_raw(outcome));
    }
}
