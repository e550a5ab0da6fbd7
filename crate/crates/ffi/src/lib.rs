//! C ABI over `fracdual`.
//!
//! Handles are opaque and owned by the caller once returned; free them with
//! the matching `*_free`. Every fallible call returns an [`FdStatus`] and
//! stores a message for [`fd_last_error_message`] on failure.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fracdual::frac_space::{frac_laplacian, SampledField};
use fracdual::frac_time::{marchaud, TimeTrace};
use fracdual::principles::moving_plane_scan;
use fracdual::{DomainKind, Error, Exterior, FracParams, FunctionDescriptor, HistoryField, Problem, SpaceGrid, SpaceTimeDescriptor};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    NumericalFailure = 4,
    Unsupported = 5,
    Panic = 6,
}

/// Fractional orders `alpha` and `s`.
pub struct FdParams(FracParams);

/// A solved trajectory.
pub struct FdTrajectory(HistoryField);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> FdStatus {
    match e {
        Error::InvalidParameter { .. }
        | Error::NonFinite { .. }
        | Error::OutOfRange(_)
        | Error::InsufficientStencil { .. }
        | Error::IncompatibleLambda { .. }
        | Error::Geometry(_) => FdStatus::InvalidArgument,
        Error::Divergent(_) | Error::Quadrature { .. } | Error::LinearSolve(_) => FdStatus::NumericalFailure,
        Error::Unsupported(_) => FdStatus::Unsupported,
    }
}

struct Fail(FdStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(FdStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> FdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FdStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside fracdual");
            FdStatus::Panic
        }
    }
}

unsafe fn slice<'a>(data: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread; empty if none. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn fd_params_new(alpha: f64, s: f64, out: *mut *mut FdParams) -> FdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = FracParams::new(alpha, s)?;
        out.write(Box::into_raw(Box::new(FdParams(p))));
        Ok(())
    })
}

/// # Safety
/// `params` must come from [`fd_params_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fd_params_free(params: *mut FdParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// `C_α` and `C_{1,s}`.
///
/// # Safety
/// `params` must be a live handle; outputs must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fd_params_constants(params: *const FdParams, c_alpha: *mut f64, c_1s: *mut f64) -> FdStatus {
    guard(|| {
        let p = &deref(params, "params")?.0;
        write(c_alpha, p.c_alpha(), "c_alpha")?;
        write(c_1s, p.c_ns(1), "c_1s")
    })
}

/// Marchaud derivative at `t_eval` of samples `u(t_start + k dt)` whose past
/// before `t_start` is the constant `past_value`.
///
/// # Safety
/// `samples` must point to `n_samples` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fd_marchaud_sampled(
    params: *const FdParams,
    t_start: f64,
    dt: f64,
    samples: *const f64,
    n_samples: usize,
    past_value: f64,
    t_eval: f64,
    out: *mut f64,
) -> FdStatus {
    guard(|| {
        let p = &deref(params, "params")?.0;
        let samples = slice(samples, n_samples, "samples")?;
        let past = FunctionDescriptor::constant(past_value);
        let trace = TimeTrace { t_start, dt, samples, past: &past };
        let v = marchaud(&trace, t_eval, p, &Default::default())?;
        write(out, v, "out")
    })
}

/// `(-Δ)^s u` at grid node `node` for values on the uniform grid
/// `[x_min, x_max]`, with `u = exterior_value` outside the grid.
///
/// # Safety
/// `values` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fd_frac_laplacian_sampled(
    params: *const FdParams,
    x_min: f64,
    x_max: f64,
    values: *const f64,
    n: usize,
    exterior_value: f64,
    node: usize,
    out: *mut f64,
) -> FdStatus {
    guard(|| {
        let p = &deref(params, "params")?.0;
        let values = slice(values, n, "values")?;
        let grid = SpaceGrid::line(x_min, x_max, n, DomainKind::Interval { a: x_min, b: x_max })?;
        if node >= n {
            return Err(Fail(FdStatus::InvalidArgument, format!("node {node} outside 0..{n}")));
        }
        let ext = Exterior::data(SpaceTimeDescriptor::constant(exterior_value));
        let field = SampledField { grid: &grid, values, exterior: &ext, t: 0.0 };
        let v = frac_laplacian(&field, node, p, &Default::default())?;
        write(out, v, "out")
    })
}

/// Solves the problem described by a JSON document (the `problem` object of
/// a CLI config with every field given).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fd_run_from_json(json: *const c_char, out: *mut *mut FdTrajectory) -> FdStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|e| Fail(FdStatus::ParseError, e.to_string()))?;
        let problem: Problem = serde_json::from_str(text).map_err(|e| Fail(FdStatus::ParseError, e.to_string()))?;
        problem.validate()?;
        let tr = fracdual::run_ivp(&problem)?;
        out.write(Box::into_raw(Box::new(FdTrajectory(tr.field))));
        Ok(())
    })
}

/// # Safety
/// `traj` must come from [`fd_run_from_json`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fd_trajectory_free(traj: *mut FdTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of stored time levels and of grid nodes.
///
/// # Safety
/// `traj` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn fd_trajectory_shape(traj: *const FdTrajectory, n_levels: *mut usize, n_nodes: *mut usize) -> FdStatus {
    guard(|| {
        let f = &deref(traj, "traj")?.0;
        write(n_levels, f.n_levels(), "n_levels")?;
        write(n_nodes, f.grid().len(), "n_nodes")
    })
}

/// Time of level `level`.
///
/// # Safety
/// `traj` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fd_trajectory_time(traj: *const FdTrajectory, level: usize, out: *mut f64) -> FdStatus {
    guard(|| {
        let f = &deref(traj, "traj")?.0;
        if level >= f.n_levels() {
            return Err(Fail(FdStatus::InvalidArgument, format!("level {level} outside 0..{}", f.n_levels())));
        }
        write(out, f.time(level), "out")
    })
}

/// Copies the node coordinates into `buf`, which holds `len >= n_nodes` doubles.
///
/// # Safety
/// `buf` must be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fd_trajectory_nodes(traj: *const FdTrajectory, buf: *mut f64, len: usize) -> FdStatus {
    guard(|| {
        let f = &deref(traj, "traj")?.0;
        copy_out(&f.grid().xs(), buf, len)
    })
}

/// Copies level `level` into `buf`, which holds `len >= n_nodes` doubles.
///
/// # Safety
/// `buf` must be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fd_trajectory_level(traj: *const FdTrajectory, level: usize, buf: *mut f64, len: usize) -> FdStatus {
    guard(|| {
        let f = &deref(traj, "traj")?.0;
        if level >= f.n_levels() {
            return Err(Fail(FdStatus::InvalidArgument, format!("level {level} outside 0..{}", f.n_levels())));
        }
        copy_out(f.level(level), buf, len)
    })
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), Fail> {
    if buf.is_null() {
        return Err(null("buf"));
    }
    if len < src.len() {
        return Err(Fail(FdStatus::InvalidArgument, format!("buffer holds {len}, need {}", src.len())));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Moving-plane scan over the last tenth of the stored levels with default
/// tolerances. `min_w` receives one value per plane; `lambda0` is set to
/// `+inf` when no plane undershoots; `monotone` to 0 or 1.
///
/// # Safety
/// `lambdas` and `min_w` must hold `n` doubles; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn fd_moving_plane_scan(
    traj: *const FdTrajectory,
    lambdas: *const f64,
    n: usize,
    min_w: *mut f64,
    lambda0: *mut f64,
    monotone: *mut i32,
) -> FdStatus {
    guard(|| {
        let f = &deref(traj, "traj")?.0;
        let lambdas = slice(lambdas, n, "lambdas")?;
        let scan = moving_plane_scan(f, lambdas, &Default::default())?;
        let mins: Vec<f64> = lambdas.iter().map(|l| scan.rows.iter().find(|r| r.lambda == *l).map_or(f64::NAN, |r| r.min_w)).collect();
        if n > 0 {
            copy_out(&mins, min_w, n)?;
        }
        write(lambda0, scan.lambda0.unwrap_or(f64::INFINITY), "lambda0")?;
        write(monotone, i32::from(scan.monotone), "monotone")
    })
}
