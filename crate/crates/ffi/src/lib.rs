//! C ABI over the `hallmhd` simulator.
//!
//! Every fallible function returns a [`HallmhdStatus`]; on failure the message
//! is available from [`hallmhd_last_error`] on the same thread. Configurations
//! and run results are opaque handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use hallmhd::dynamics::{run, RunOptions, RunRecord, StopReason};
use hallmhd::elliptic::StreamSolver;
use hallmhd::error::{EllipticError, Error};
use hallmhd::grid::{Grid, Parity, ScalarField};
use hallmhd::io::{cmd_run, parse_config, parse_config_str, series_values, Config, SERIES_COLUMNS};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HallmhdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ConfigError = 3,
    NotConverged = 4,
    RuntimeError = 5,
    IoError = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HallmhdStopReason {
    TEnd = 0,
    GradientStop = 1,
    Diverged = 2,
}

/// Blow-up estimate of a run. `t_extrapolated` and `fit_quality` are NaN when
/// no blow-up was detected.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HallmhdPrediction {
    pub t_riccati_lower: f64,
    pub t_theorem_cap: f64,
    pub t_extrapolated: f64,
    pub fit_quality: f64,
    pub fit_samples: usize,
    pub detected: bool,
}

/// Parsed and validated configuration.
pub struct HallmhdConfig(Config);

/// Completed run.
pub struct HallmhdRun {
    record: RunRecord,
    series: Vec<[f64; 15]>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> HallmhdStatus {
    match e {
        Error::Config(_) | Error::Data(_) | Error::Grid(_) => HallmhdStatus::ConfigError,
        Error::Elliptic(EllipticError::NotConverged { .. }) => HallmhdStatus::NotConverged,
        Error::Io { .. } => HallmhdStatus::IoError,
        _ => HallmhdStatus::RuntimeError,
    }
}

fn fail(status: HallmhdStatus, msg: impl Into<String>) -> HallmhdStatus {
    set_error(msg);
    status
}

/// Runs `f` with panics converted to [`HallmhdStatus::Panic`].
fn guard(f: impl FnOnce() -> HallmhdStatus) -> HallmhdStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(HallmhdStatus::Panic, format!("panic: {msg}"))
        }
    }
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, HallmhdStatus> {
    if p.is_null() {
        return Err(fail(HallmhdStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(HallmhdStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn hallmhd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hallmhd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses the configuration file at `path` into `*out`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hallmhd_config_from_file(path: *const c_char, out: *mut *mut HallmhdConfig) -> HallmhdStatus {
    guard(|| {
        if out.is_null() {
            return fail(HallmhdStatus::NullPointer, "out is null");
        }
        let path = match c_str(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        match parse_config(Path::new(path)) {
            Ok(cfg) => {
                *out = Box::into_raw(Box::new(HallmhdConfig(cfg)));
                HallmhdStatus::Ok
            }
            Err(e) => fail(HallmhdStatus::ConfigError, e.to_string()),
        }
    })
}

/// Parses configuration text into `*out`. `name` labels diagnostics and may
/// be NULL.
///
/// # Safety
/// `text` (and `name` unless NULL) must be NUL-terminated strings and `out` a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hallmhd_config_from_str(
    text: *const c_char,
    name: *const c_char,
    out: *mut *mut HallmhdConfig,
) -> HallmhdStatus {
    guard(|| {
        if out.is_null() {
            return fail(HallmhdStatus::NullPointer, "out is null");
        }
        let text = match c_str(text, "text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let name = if name.is_null() {
            "<string>"
        } else {
            match c_str(name, "name") {
                Ok(n) => n,
                Err(s) => return s,
            }
        };
        match parse_config_str(text, Path::new(name)) {
            Ok(cfg) => {
                *out = Box::into_raw(Box::new(HallmhdConfig(cfg)));
                HallmhdStatus::Ok
            }
            Err(e) => fail(HallmhdStatus::ConfigError, e.to_string()),
        }
    })
}

/// # Safety
/// `cfg` must be NULL or a handle from a `hallmhd_config_from_*` call that
/// has not been freed.
#[no_mangle]
pub unsafe extern "C" fn hallmhd_config_free(cfg: *mut HallmhdConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs the configured simulation into `*out`. When `out_dir` is not NULL the
/// usual outputs (series, snapshots, report) are written there as well.
///
/// A run that diverges still succeeds; check [`hallmhd_run_stop_reason`].
///
/// # Safety
/// `cfg` must be a live handle, `out_dir` NULL or a NUL-terminated string,
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hallmhd_run(
    cfg: *const HallmhdConfig,
    out_dir: *const c_char,
    out: *mut *mut HallmhdRun,
) -> HallmhdStatus {
    guard(|| {
        if cfg.is_null() || out.is_null() {
            return fail(HallmhdStatus::NullPointer, "cfg or out is null");
        }
        let cfg = &(*cfg).0;
        let result = if out_dir.is_null() {
            cfg.data
                .state(&cfg.grid.grid())
                .map_err(Error::from)
                .and_then(|init| run(init, &cfg.solver, &RunOptions::default(), |_, _, _| Ok(())))
        } else {
            match c_str(out_dir, "out_dir") {
                Ok(d) => cmd_run(cfg, Path::new(d)).map(|(_, rec)| rec),
                Err(s) => return s,
            }
        };
        match result {
            Ok(record) => {
                let series = series_values(&record);
                *out = Box::into_raw(Box::new(HallmhdRun { record, series }));
                HallmhdStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `run` must be NULL or a handle from [`hallmhd_run`] that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn hallmhd_run_free(run: *mut HallmhdRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Number of time levels recorded (initial state included); 0 for NULL.
///
/// # Safety
/// `run` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hallmhd_run_len(run: *const HallmhdRun) -> usize {
    if run.is_null() {
        0
    } else {
        (*run).series.len()
    }
}

/// Number of series columns.
#[no_mangle]
pub extern "C" fn hallmhd_series_columns() -> usize {
    SERIES_COLUMNS.len()
}

/// Static name of series column `index`, or NULL when out of range.
#[no_mangle]
pub extern "C" fn hallmhd_series_column_name(index: usize) -> *const c_char {
    const NAMES: [&str; 15] = [
        "t\0",
        "linf_pi\0",
        "l2_pi\0",
        "l1_pi\0",
        "l2_omega\0",
        "linf_gamma\0",
        "swirl_sup\0",
        "max_f_axis\0",
        "traj_phi\0",
        "traj_f\0",
        "traj_g\0",
        "traj_pi\0",
        "riccati_residual\0",
        "margin_max_principle\0",
        "margin_integral_ineq\0",
    ];
    NAMES.get(index).map_or(ptr::null(), |s| s.as_ptr().cast())
}

/// Copies series column `column` (one value per time level) into `buf`,
/// which must hold `hallmhd_run_len(run)` values.
///
/// # Safety
/// `run` must be a live handle and `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn hallmhd_run_series(
    run: *const HallmhdRun,
    column: usize,
    buf: *mut f64,
    len: usize,
) -> HallmhdStatus {
    guard(|| {
        if run.is_null() || buf.is_null() {
            return fail(HallmhdStatus::NullPointer, "run or buf is null");
        }
        let series = &(*run).series;
        if column >= SERIES_COLUMNS.len() {
            return fail(HallmhdStatus::InvalidArgument, format!("column {column} out of range"));
        }
        if len < series.len() {
            return fail(
                HallmhdStatus::InvalidArgument,
                format!("buffer holds {len} values, need {}", series.len()),
            );
        }
        let out = std::slice::from_raw_parts_mut(buf, series.len());
        for (o, row) in out.iter_mut().zip(series) {
            *o = row[column];
        }
        HallmhdStatus::Ok
    })
}

/// # Safety
/// `run` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hallmhd_run_stop_reason(run: *const HallmhdRun) -> HallmhdStopReason {
    if run.is_null() {
        return HallmhdStopReason::Diverged;
    }
    match (*run).record.stop {
        StopReason::TEnd => HallmhdStopReason::TEnd,
        StopReason::GradientStop => HallmhdStopReason::GradientStop,
        StopReason::Diverged => HallmhdStopReason::Diverged,
    }
}

/// # Safety
/// `run` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hallmhd_run_prediction(run: *const HallmhdRun, out: *mut HallmhdPrediction) -> HallmhdStatus {
    guard(|| {
        if run.is_null() || out.is_null() {
            return fail(HallmhdStatus::NullPointer, "run or out is null");
        }
        let p = &(*run).record.prediction;
        *out = HallmhdPrediction {
            t_riccati_lower: p.t_riccati_lower,
            t_theorem_cap: p.t_theorem_cap,
            t_extrapolated: p.t_extrapolated.unwrap_or(f64::NAN),
            fit_quality: p.fit_quality.unwrap_or(f64::NAN),
            fit_samples: p.fit_samples,
            detected: p.detected(),
        };
        HallmhdStatus::Ok
    })
}

/// Solves `-(d_rr + (3/r) d_r + d_zz) phi = omega` on an `nr x nz` grid over
/// `[0, r_max] x [-z_half, z_half]`. Arrays are row-major with index
/// `i * nz + j` (`i` radial). On success `*residual` holds the achieved
/// residual; on [`HallmhdStatus::NotConverged`] `phi` still receives the best
/// iterate.
///
/// # Safety
/// `omega` must be readable and `phi` writable for `nr * nz` doubles;
/// `residual` must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn hallmhd_solve_stream(
    nr: usize,
    nz: usize,
    r_max: f64,
    z_half: f64,
    omega: *const f64,
    tol: f64,
    max_iter: usize,
    phi: *mut f64,
    residual: *mut f64,
) -> HallmhdStatus {
    guard(|| {
        if omega.is_null() || phi.is_null() {
            return fail(HallmhdStatus::NullPointer, "omega or phi is null");
        }
        if tol.is_nan() || tol <= 0.0 || max_iter == 0 {
            return fail(HallmhdStatus::InvalidArgument, "tol must be positive and max_iter at least 1");
        }
        let grid = match Grid::new(nr, nz, r_max, z_half) {
            Ok(g) => g,
            Err(e) => return fail(HallmhdStatus::InvalidArgument, e.to_string()),
        };
        let values = std::slice::from_raw_parts(omega, grid.len()).to_vec();
        let field = match ScalarField::from_values(&grid, Parity::Even, values) {
            Ok(f) => f,
            Err(e) => return fail(HallmhdStatus::InvalidArgument, e.to_string()),
        };
        let out = std::slice::from_raw_parts_mut(phi, grid.len());
        let (stream, status) = match StreamSolver::new(&grid).solve(&field, tol, max_iter) {
            Ok(s) => (s, HallmhdStatus::Ok),
            Err(EllipticError::NotConverged { best, .. }) => {
                let msg = format!("stream solve did not converge (residual {:e})", best.residual_linf);
                set_error(msg);
                (*best, HallmhdStatus::NotConverged)
            }
            Err(e) => return fail(HallmhdStatus::InvalidArgument, e.to_string()),
        };
        out.copy_from_slice(stream.phi.values());
        if !residual.is_null() {
            *residual = stream.residual_linf;
        }
        status
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_names_match_core() {
        for (k, name) in SERIES_COLUMNS.iter().enumerate() {
            let p = hallmhd_series_column_name(k);
            assert_eq!(unsafe { CStr::from_ptr(p) }.to_str().unwrap(), *name);
        }
        assert!(hallmhd_series_column_name(SERIES_COLUMNS.len()).is_null());
    }
}
