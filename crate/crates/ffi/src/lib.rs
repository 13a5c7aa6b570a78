//! C interface to `rlsvi-core`.
//!
//! Every function returns an [`RlsviStatus`]. Objects cross the boundary as
//! opaque handles that the caller releases with the matching `_free`
//! function. On failure, [`rlsvi_last_error`] describes what went wrong on
//! the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use nalgebra::{DMatrix, DVector};
use rlsvi_core::environments::{chain_regret_lower_bound, make_chain, sample_dirichlet_mdp};
use rlsvi_core::harness::{run_experiment, stream_rng, write_outputs, Experiment, ExperimentConfig, Stream};
use rlsvi_core::mdp::{solve_optimal, FiniteHorizonMdp, ValueFunctions};
use rlsvi_core::regression::{ridge_posterior, RegressionData};
use rlsvi_core::Error;

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RlsviStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    Io = 5,
    Panic = 6,
}

/// Finite-horizon MDP.
pub struct RlsviMdp(FiniteHorizonMdp);

/// Optimal value functions of an MDP.
pub struct RlsviValues(ValueFunctions);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> RlsviStatus {
    match e {
        Error::InvalidModel(_) | Error::InvalidArgument(_) | Error::PeriodMismatch { .. } => {
            RlsviStatus::InvalidArgument
        }
        Error::Config(_) | Error::Json(_) => RlsviStatus::Config,
        Error::NonFinite | Error::Factorization | Error::ZeroValueFunction => RlsviStatus::Numerical,
        Error::Io(_) | Error::Csv(_) => RlsviStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (RlsviStatus, String)>) -> RlsviStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            RlsviStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("panic inside rlsvi");
            RlsviStatus::Panic
        }
    }
}

fn core(e: Error) -> (RlsviStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (RlsviStatus, String) {
    (RlsviStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: String) -> (RlsviStatus, String) {
    (RlsviStatus::InvalidArgument, msg)
}

unsafe fn utf8<'a>(p: *const c_char, what: &str) -> Result<&'a str, (RlsviStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{what} is not UTF-8")))
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn rlsvi_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, static.
#[no_mangle]
pub extern "C" fn rlsvi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Deterministic chain of length `n` with horizon `n`.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn rlsvi_chain_new(n: usize, out: *mut *mut RlsviMdp) -> RlsviStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let mdp = make_chain(n).map_err(core)?;
        *out = Box::into_raw(Box::new(RlsviMdp(mdp)));
        Ok(())
    })
}

/// Random MDP with Dirichlet(1, ..., 1) transitions, reproducible from `seed`.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn rlsvi_dirichlet_mdp_new(
    num_states: usize,
    num_actions: usize,
    horizon: usize,
    seed: u64,
    out: *mut *mut RlsviMdp,
) -> RlsviStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let mut rng = stream_rng(seed, 0, Stream::Environment);
        let mdp = sample_dirichlet_mdp(num_states, num_actions, horizon, &mut rng).map_err(core)?;
        *out = Box::into_raw(Box::new(RlsviMdp(mdp)));
        Ok(())
    })
}

/// Writes state count, action count and horizon. Any output may be null.
///
/// # Safety
/// `mdp` must come from a constructor here and not be freed; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn rlsvi_mdp_dims(
    mdp: *const RlsviMdp,
    num_states: *mut usize,
    num_actions: *mut usize,
    horizon: *mut usize,
) -> RlsviStatus {
    guard(|| {
        let m = &mdp.as_ref().ok_or_else(|| null("mdp"))?.0;
        for (p, v) in [(num_states, m.num_states()), (num_actions, m.num_actions()), (horizon, m.horizon())] {
            if !p.is_null() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `mdp` must be null or come from a constructor here, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn rlsvi_mdp_free(mdp: *mut RlsviMdp) {
    if !mdp.is_null() {
        drop(Box::from_raw(mdp));
    }
}

/// Exact backward induction.
///
/// # Safety
/// `mdp` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rlsvi_solve(mdp: *const RlsviMdp, out: *mut *mut RlsviValues) -> RlsviStatus {
    guard(|| {
        let m = &mdp.as_ref().ok_or_else(|| null("mdp"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = Box::into_raw(Box::new(RlsviValues(solve_optimal(m))));
        Ok(())
    })
}

/// `V*_period(state)`, with `period` up to and including the horizon.
///
/// # Safety
/// `values` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rlsvi_values_v(
    values: *const RlsviValues,
    period: usize,
    state: usize,
    out: *mut f64,
) -> RlsviStatus {
    guard(|| {
        let v = &values.as_ref().ok_or_else(|| null("values"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = *v
            .v_star
            .get(period)
            .and_then(|row| row.get(state))
            .ok_or_else(|| invalid(format!("no value at period {period}, state {state}")))?;
        Ok(())
    })
}

/// `Q*_period(state, action)` for `period` below the horizon.
///
/// # Safety
/// `values` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rlsvi_values_q(
    values: *const RlsviValues,
    period: usize,
    state: usize,
    action: usize,
    out: *mut f64,
) -> RlsviStatus {
    guard(|| {
        let v = &values.as_ref().ok_or_else(|| null("values"))?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let a = v.num_actions();
        if action >= a {
            return Err(invalid(format!("action {action} out of range")));
        }
        *out = *v
            .q_star
            .get(period)
            .and_then(|row| row.get(state * a + action))
            .ok_or_else(|| invalid(format!("no value at period {period}, state {state}")))?;
        Ok(())
    })
}

/// # Safety
/// `values` must be null or come from [`rlsvi_solve`], freed at most once.
#[no_mangle]
pub unsafe extern "C" fn rlsvi_values_free(values: *mut RlsviValues) {
    if !values.is_null() {
        drop(Box::from_raw(values));
    }
}

/// Gaussian posterior of Bayesian linear regression with prior `N(0, I/λ)`
/// and noise variance `σ²`. `design` is `rows × cols`, row-major. Writes the
/// mean to `mean_out` (`cols`) and the covariance, row-major, to `cov_out`
/// (`cols × cols`).
///
/// # Safety
/// Each pointer must be valid for the stated number of `f64`s. `design` and
/// `targets` may be null when `rows` is 0.
#[no_mangle]
pub unsafe extern "C" fn rlsvi_ridge_posterior(
    design: *const f64,
    targets: *const f64,
    rows: usize,
    cols: usize,
    sigma: f64,
    lambda: f64,
    mean_out: *mut f64,
    cov_out: *mut f64,
) -> RlsviStatus {
    guard(|| {
        if mean_out.is_null() || cov_out.is_null() {
            return Err(null("output buffer"));
        }
        if rows > 0 && (design.is_null() || targets.is_null()) {
            return Err(null("design or targets"));
        }
        let data = if rows == 0 {
            RegressionData::empty(cols)
        } else {
            let a = std::slice::from_raw_parts(design, rows * cols);
            let b = std::slice::from_raw_parts(targets, rows);
            RegressionData::new(DMatrix::from_row_slice(rows, cols, a), DVector::from_column_slice(b))
                .map_err(core)?
        };
        let post = ridge_posterior(&data, sigma, lambda).map_err(core)?;
        ptr::copy_nonoverlapping(post.mean.as_ptr(), mean_out, cols);
        for i in 0..cols {
            for j in 0..cols {
                *cov_out.add(i * cols + j) = post.covariance[(i, j)];
            }
        }
        Ok(())
    })
}

/// Expected regret lower bound for dithering exploration on a chain of
/// `num_states` states over `steps` time steps (a multiple of `horizon`).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rlsvi_chain_regret_lower_bound(
    num_states: u32,
    steps: u64,
    horizon: u64,
    out: *mut f64,
) -> RlsviStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = chain_regret_lower_bound(num_states, steps, horizon).map_err(core)?;
        Ok(())
    })
}

/// Runs `experiment` with settings from the JSON object `config_json` (may be
/// null for the defaults) and writes its CSV to `csv_path`, with the summary
/// and manifest beside it.
///
/// # Safety
/// `experiment` and `csv_path` must be NUL-terminated strings; `config_json`
/// must be null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn rlsvi_run_experiment(
    experiment: *const c_char,
    config_json: *const c_char,
    csv_path: *const c_char,
) -> RlsviStatus {
    guard(|| {
        let name = utf8(experiment, "experiment")?;
        let path = utf8(csv_path, "csv_path")?;
        let exp: Experiment = name.parse().map_err(core)?;
        let mut layers = Vec::new();
        if !config_json.is_null() {
            let text = utf8(config_json, "config_json")?;
            layers.push(serde_json::from_str(text).map_err(|e| (RlsviStatus::Config, e.to_string()))?);
        }
        let cfg = ExperimentConfig::merged(exp, &layers).map_err(core)?;
        let out = run_experiment(&cfg).map_err(core)?;
        write_outputs(&cfg, &out, Path::new(path)).map_err(core)?;
        Ok(())
    })
}
