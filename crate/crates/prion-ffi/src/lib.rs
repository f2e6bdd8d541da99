//! C ABI for the prion proliferation solver.
//!
//! The surface follows the usual opaque-handle pattern: callers parse a JSON
//! run configuration into a `PrionModel`, drive simulations or audits from
//! it, and read results back either as flat `f64` series or as JSON strings.
//! Every fallible call returns a [`PrionStatus`]; the most recent error
//! message is kept per thread and is readable via [`prion_last_error`].
//!
//! The companion header `include/prion.h` is generated from this file by
//! cbindgen at build time.

use prion_core::config::{parse_config, RunConfig};
use prion_core::hypothesis::audit;
use prion_core::integrator::{simulate, Trajectory};
use prion_core::operators::Discretization;
use prion_core::oracle::{compare_to_simulation, solve_moment_ode, MomentOdeParams};
use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::path::Path;
use std::sync::Arc;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrionStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The configuration failed validation; see `prion_last_error`.
    InvalidConfig = 3,
    /// The solver reported an error; see `prion_last_error`.
    Runtime = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized: String = msg.chars().map(|c| if c == '\0' { ' ' } else { c }).collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(sanitized).unwrap());
}

/// Message of the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn prion_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Crate version as a static string.
#[no_mangle]
pub extern "C" fn prion_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Parsed run configuration (opaque).
pub struct PrionModel {
    config: RunConfig,
}

/// Stored simulation output (opaque).
pub struct PrionTrajectory {
    inner: Trajectory,
}

/// Column selector for [`prion_trajectory_series`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrionSeries {
    Time = 0,
    Monomers = 1,
    PolymerNumber = 2,
    PolymerMass = 3,
    Overflow = 4,
    BalanceResidual = 5,
}

unsafe fn cstr_arg<'a>(ptr: *const c_char) -> Result<&'a str, PrionStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(PrionStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        PrionStatus::InvalidUtf8
    })
}

/// Parses and validates a JSON run configuration.
///
/// `base_dir` resolves relative paths inside the configuration and may be
/// null for the current directory. On success `*out` owns the model; free
/// it with [`prion_model_free`].
///
/// # Safety
/// `json` (and `base_dir` when non-null) must point to NUL-terminated
/// strings; `out` must be a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn prion_model_parse(
    json: *const c_char,
    base_dir: *const c_char,
    out: *mut *mut PrionModel,
) -> PrionStatus {
    if out.is_null() {
        set_error("null output pointer");
        return PrionStatus::NullArgument;
    }
    let text = match cstr_arg(json) {
        Ok(t) => t,
        Err(s) => return s,
    };
    let dir = if base_dir.is_null() {
        ".".to_string()
    } else {
        match cstr_arg(base_dir) {
            Ok(d) => d.to_string(),
            Err(s) => return s,
        }
    };
    match parse_config(text, Path::new(&dir)) {
        Ok(config) => {
            *out = Box::into_raw(Box::new(PrionModel { config }));
            PrionStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            PrionStatus::InvalidConfig
        }
    }
}

/// Releases a model handle. Null is a no-op.
///
/// # Safety
/// `model` must have been produced by [`prion_model_parse`] and not freed.
#[no_mangle]
pub unsafe extern "C" fn prion_model_free(model: *mut PrionModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

fn run_simulation(config: &RunConfig) -> prion_core::Result<Trajectory> {
    let rates = config.build_rates()?;
    let grid = config.build_grid()?;
    let disc = Arc::new(Discretization::new(grid, &rates)?);
    let u0 = config.initial_density(&disc.grid)?;
    simulate(&disc, &rates, config.initial.monomers, u0, &config.sim_options())
}

/// Runs the configured simulation. On success `*out` owns the trajectory;
/// free it with [`prion_trajectory_free`].
///
/// # Safety
/// `model` must be a live handle from [`prion_model_parse`]; `out` must be
/// a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn prion_simulate(
    model: *const PrionModel,
    out: *mut *mut PrionTrajectory,
) -> PrionStatus {
    if model.is_null() || out.is_null() {
        set_error("null argument");
        return PrionStatus::NullArgument;
    }
    match run_simulation(&(*model).config) {
        Ok(traj) => {
            *out = Box::into_raw(Box::new(PrionTrajectory { inner: traj }));
            PrionStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            PrionStatus::Runtime
        }
    }
}

/// Releases a trajectory handle. Null is a no-op.
///
/// # Safety
/// `traj` must have been produced by [`prion_simulate`] and not freed.
#[no_mangle]
pub unsafe extern "C" fn prion_trajectory_free(traj: *mut PrionTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of stored output times.
///
/// # Safety
/// `traj` must be a live handle from [`prion_simulate`].
#[no_mangle]
pub unsafe extern "C" fn prion_trajectory_len(traj: *const PrionTrajectory) -> usize {
    if traj.is_null() {
        return 0;
    }
    (*traj).inner.times.len()
}

/// Copies one output column into a caller-provided buffer of capacity `cap`.
/// Returns the number of values written, or -1 when arguments are invalid.
///
/// # Safety
/// `traj` must be a live handle; `buf` must point to at least `cap`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn prion_trajectory_series(
    traj: *const PrionTrajectory,
    series: PrionSeries,
    buf: *mut f64,
    cap: usize,
) -> isize {
    if traj.is_null() || buf.is_null() {
        set_error("null argument");
        return -1;
    }
    let t = &(*traj).inner;
    let n = t.times.len().min(cap);
    let out = std::slice::from_raw_parts_mut(buf, n);
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = match series {
            PrionSeries::Time => t.times[i],
            PrionSeries::Monomers => t.states[i].v,
            PrionSeries::PolymerNumber => t.moments[i].number,
            PrionSeries::PolymerMass => t.moments[i].mass,
            PrionSeries::Overflow => t.states[i].ledger.overflow,
            PrionSeries::BalanceResidual => t.balance_residuals[i],
        };
    }
    n as isize
}

fn json_out(value: serde_json::Value, out: *mut *mut c_char) -> PrionStatus {
    let text = serde_json::to_string_pretty(&value).expect("serializable report");
    let c = CString::new(text).expect("JSON has no NUL bytes");
    unsafe {
        *out = c.into_raw();
    }
    PrionStatus::Ok
}

/// Audits the configured rate set against the uniqueness hypotheses and
/// returns the report as a JSON string. Free it with [`prion_string_free`].
///
/// # Safety
/// `model` must be a live handle; `out` must be a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn prion_check_hypotheses(
    model: *const PrionModel,
    out: *mut *mut c_char,
) -> PrionStatus {
    if model.is_null() || out.is_null() {
        set_error("null argument");
        return PrionStatus::NullArgument;
    }
    let config = &(*model).config;
    let rates = match config.build_rates() {
        Ok(r) => r,
        Err(e) => {
            set_error(&e.to_string());
            return PrionStatus::Runtime;
        }
    };
    let report = audit(
        &rates,
        &config.audit_options(),
        &config.diagnostics.moment_orders,
        config.hypothesis.alpha,
        config.hypothesis.weight_exponent,
    );
    json_out(serde_json::to_value(&report).unwrap(), out)
}

/// Runs the simulation and compares it against the closed moment oracle,
/// returning a JSON summary. Free it with [`prion_string_free`]. Fails when
/// the configured rates are outside the constant-rate family.
///
/// # Safety
/// `model` must be a live handle; `out` must be a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn prion_oracle_compare(
    model: *const PrionModel,
    out: *mut *mut c_char,
) -> PrionStatus {
    if model.is_null() || out.is_null() {
        set_error("null argument");
        return PrionStatus::NullArgument;
    }
    let config = &(*model).config;
    let result = (|| -> prion_core::Result<serde_json::Value> {
        let traj = run_simulation(config)?;
        let params = MomentOdeParams::from_rates(&traj.rates)?;
        let series = solve_moment_ode(
            &params,
            traj.states[0].v,
            traj.moments[0].number,
            traj.moments[0].mass,
            &traj.times,
            1e-10,
        )?;
        let cmp = compare_to_simulation(&traj, &series)?;
        Ok(serde_json::json!({
            "err_v": cmp.err_v,
            "err_p": cmp.err_p,
            "err_u": cmp.err_u,
            "overflow_share": cmp.overflow_share,
            "valid": cmp.valid,
        }))
    })();
    match result {
        Ok(v) => json_out(v, out),
        Err(e) => {
            set_error(&e.to_string());
            PrionStatus::Runtime
        }
    }
}

/// Frees a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must have been returned by a prion function and not freed before.
#[no_mangle]
pub unsafe extern "C" fn prion_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    const CONFIG: &str = r#"{
        "rates": {
            "family": "power_law",
            "beta_coef": 1.0, "beta_exp": 1.0,
            "mu_coef": 1.0, "mu_exp": 0.0,
            "tau_coef": 1.0, "tau_exp": 0.0,
            "eta": 1.0,
            "lambda": 1.0, "gamma": 1.0, "nu": 0.0,
            "k0": "uniform"
        },
        "grid": {"y0": 1.0, "ymax": 40.0, "cells": 64, "mode": "uniform"},
        "initial": {"monomers": 1.0, "polymers": {"preset": "gaussian", "center": 2.5, "width": 1.0, "amplitude": 1.0}},
        "time": {"horizon": 0.5, "dt": 0.001, "scheme": "rk4", "output_every": 0.1}
    }"#;

    fn cstring(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    #[test]
    fn model_lifecycle_and_series_readback() {
        unsafe {
            let json = cstring(CONFIG);
            let mut model: *mut PrionModel = ptr::null_mut();
            assert_eq!(prion_model_parse(json.as_ptr(), ptr::null(), &mut model), PrionStatus::Ok);
            assert!(!model.is_null());

            let mut traj: *mut PrionTrajectory = ptr::null_mut();
            assert_eq!(prion_simulate(model, &mut traj), PrionStatus::Ok);
            let n = prion_trajectory_len(traj);
            assert_eq!(n, 6); // t = 0.0 .. 0.5 every 0.1

            let mut times = vec![0.0; n];
            let wrote = prion_trajectory_series(traj, PrionSeries::Time, times.as_mut_ptr(), n);
            assert_eq!(wrote, n as isize);
            assert_eq!(times[0], 0.0);
            assert!((times[n - 1] - 0.5).abs() < 1e-12);

            let mut v = vec![0.0; n];
            prion_trajectory_series(traj, PrionSeries::Monomers, v.as_mut_ptr(), n);
            assert!(v.iter().all(|&x| x >= 0.0 && x.is_finite()));

            let mut res = vec![0.0; n];
            prion_trajectory_series(traj, PrionSeries::BalanceResidual, res.as_mut_ptr(), n);
            assert!(res.iter().all(|&r| r < 1e-10));

            prion_trajectory_free(traj);
            prion_model_free(model);
        }
    }

    #[test]
    fn invalid_config_reports_every_error() {
        unsafe {
            let bad = cstring(&CONFIG.replace("\"beta_exp\": 1.0", "\"beta_exp\": 9.0"));
            let mut model: *mut PrionModel = ptr::null_mut();
            let status = prion_model_parse(bad.as_ptr(), ptr::null(), &mut model);
            assert_eq!(status, PrionStatus::InvalidConfig);
            assert!(model.is_null());
            let msg = CStr::from_ptr(prion_last_error()).to_str().unwrap();
            assert!(msg.contains("beta_exp"), "{msg}");
            assert!(msg.contains("0 <= value <= 2"), "{msg}");
        }
    }

    #[test]
    fn null_arguments_are_rejected() {
        unsafe {
            let mut model: *mut PrionModel = ptr::null_mut();
            assert_eq!(
                prion_model_parse(ptr::null(), ptr::null(), &mut model),
                PrionStatus::NullArgument
            );
            let json = cstring(CONFIG);
            assert_eq!(
                prion_model_parse(json.as_ptr(), ptr::null(), ptr::null_mut()),
                PrionStatus::NullArgument
            );
            assert_eq!(prion_trajectory_len(ptr::null()), 0);
            assert_eq!(
                prion_trajectory_series(ptr::null(), PrionSeries::Time, ptr::null_mut(), 0),
                -1
            );
        }
    }

    #[test]
    fn hypothesis_audit_returns_json() {
        unsafe {
            let json = cstring(CONFIG);
            let mut model: *mut PrionModel = ptr::null_mut();
            assert_eq!(prion_model_parse(json.as_ptr(), ptr::null(), &mut model), PrionStatus::Ok);
            let mut report: *mut c_char = ptr::null_mut();
            assert_eq!(prion_check_hypotheses(model, &mut report), PrionStatus::Ok);
            let text = CStr::from_ptr(report).to_str().unwrap();
            let value: serde_json::Value = serde_json::from_str(text).unwrap();
            assert!(value["reports"].is_array());
            assert!((value["alpha"].as_f64().unwrap() - 1.0).abs() < 1e-9);
            prion_string_free(report);
            prion_model_free(model);
        }
    }

    #[test]
    fn oracle_summary_round_trips() {
        unsafe {
            let json = cstring(CONFIG);
            let mut model: *mut PrionModel = ptr::null_mut();
            assert_eq!(prion_model_parse(json.as_ptr(), ptr::null(), &mut model), PrionStatus::Ok);
            let mut summary: *mut c_char = ptr::null_mut();
            assert_eq!(prion_oracle_compare(model, &mut summary), PrionStatus::Ok);
            let value: serde_json::Value =
                serde_json::from_str(CStr::from_ptr(summary).to_str().unwrap()).unwrap();
            assert!(value["err_p"].as_f64().unwrap() < 0.2);
            assert!(value["valid"].as_bool().unwrap());
            prion_string_free(summary);
            prion_model_free(model);
        }
    }

    #[test]
    fn generated_header_covers_the_surface() {
        let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/prion.h"))
            .expect("cbindgen header generated at build time");
        for symbol in [
            "prion_model_parse",
            "prion_simulate",
            "prion_trajectory_series",
            "prion_check_hypotheses",
            "prion_oracle_compare",
            "prion_last_error",
            "prion_string_free",
            "PrionStatus",
            "PrionSeries",
        ] {
            assert!(header.contains(symbol), "header is missing {symbol}");
        }
    }
}
