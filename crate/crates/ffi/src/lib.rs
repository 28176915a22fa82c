//! C ABI over the solver, the closed-form boundaries and the simulator.
//!
//! Every entry point returns an [`NtStatus`]; results go through out-pointers.
//! A human-readable message for the last failure on the calling thread is
//! available from [`nt_last_error_message`]. Handles are opaque and must be
//! released with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use notrade::approx::{first_order_boundary, naive_boundary};
use notrade::model::{ModelParams, Position};
use notrade::numerics::GridSpec;
use notrade::simulate::{run_simulation, PolicySpec, SimConfig};
use notrade::solver::{reconstruct_bias, solve_fixed_point, BiasBoundary, SolveReport, SolverConfig, SolverError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotConverged = 3,
    NumericalFailure = 4,
    SimulationFailure = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Solver settings. Start from [`nt_solver_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NtSolverOptions {
    pub epsilon: f64,
    pub max_iterations: u32,
    pub grid_nodes: u32,
    pub grid_extent: f64,
    pub quad_nodes: u32,
}

/// Per-period averages from a simulation run.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NtSimResult {
    pub gross: f64,
    pub net: f64,
    pub cost: f64,
    pub switch_rate: f64,
    pub std_error_gross: f64,
    pub std_error_net: f64,
    pub std_error_cost: f64,
    pub n_steps: u64,
}

/// Solved bias/boundary pair.
pub struct NtSolution {
    boundary: BiasBoundary,
    report: SolveReport,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: NtStatus, msg: impl Into<String>) -> NtStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> NtStatus) -> NtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(NtStatus::Panic, "internal panic"),
    }
}

fn position(q: i32) -> Result<Position, NtStatus> {
    Position::from_sign(q).ok_or_else(|| fail(NtStatus::InvalidArgument, format!("position must be +1 or -1 (got {q})")))
}

fn params(rho0: f64, rho1: f64, cost: f64) -> Result<ModelParams, NtStatus> {
    ModelParams::new(rho0, rho1, cost).map_err(|e| fail(NtStatus::InvalidArgument, e.to_string()))
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

macro_rules! out_ref {
    ($p:expr) => {
        match unsafe { $p.as_mut() } {
            Some(r) => r,
            None => return fail(NtStatus::NullPointer, concat!("null pointer: ", stringify!($p))),
        }
    };
}

macro_rules! in_ref {
    ($p:expr) => {
        match unsafe { $p.as_ref() } {
            Some(r) => r,
            None => return fail(NtStatus::NullPointer, concat!("null pointer: ", stringify!($p))),
        }
    };
}

#[no_mangle]
pub extern "C" fn nt_solver_options_default() -> NtSolverOptions {
    let d = SolverConfig::default();
    NtSolverOptions {
        epsilon: d.epsilon,
        max_iterations: d.max_iterations as u32,
        grid_nodes: d.grid.nodes as u32,
        grid_extent: d.grid.extent,
        quad_nodes: d.quad_nodes as u32,
    }
}

/// Solves the fixed point. `options` may be null for defaults. On
/// `NotConverged` the last iterate is still stored in `*out`.
///
/// # Safety
/// `options` must be null or valid; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nt_solve(
    rho0: f64,
    rho1: f64,
    cost: f64,
    options: *const NtSolverOptions,
    out: *mut *mut NtSolution,
) -> NtStatus {
    guard(|| {
        let out = out_ref!(out);
        *out = std::ptr::null_mut();
        let p = try_status!(params(rho0, rho1, cost));
        let opts = unsafe { options.as_ref() }.copied().unwrap_or_else(|| nt_solver_options_default());
        let grid = try_status!(GridSpec::new(opts.grid_nodes as usize, opts.grid_extent)
            .map_err(|e| fail(NtStatus::InvalidArgument, e.to_string())));
        let config = SolverConfig {
            epsilon: opts.epsilon,
            max_iterations: opts.max_iterations as usize,
            grid,
            quad_nodes: opts.quad_nodes as usize,
            ..SolverConfig::default()
        };
        let (boundary, report, status) = match solve_fixed_point(&config, &p) {
            Ok((b, r)) => (b, r, NtStatus::Ok),
            Err(SolverError::NotConverged { boundary, report }) => {
                set_error(format!("not converged after {} iterations", report.iterations));
                (*boundary, report, NtStatus::NotConverged)
            }
            Err(e @ (SolverError::InvalidConfig(_) | SolverError::UnsupportedRegime(_))) => {
                return fail(NtStatus::InvalidArgument, e.to_string())
            }
            Err(e) => return fail(NtStatus::NumericalFailure, e.to_string()),
        };
        *out = Box::into_raw(Box::new(NtSolution { boundary, report }));
        status
    })
}

/// # Safety
/// `solution` must be null or a pointer returned by [`nt_solve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nt_solution_free(solution: *mut NtSolution) {
    if !solution.is_null() {
        drop(unsafe { Box::from_raw(solution) });
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nt_solution_lambda(solution: *const NtSolution, out: *mut f64) -> NtStatus {
    guard(|| {
        let s = in_ref!(solution);
        *out_ref!(out) = s.report.lambda;
        NtStatus::Ok
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nt_solution_iterations(solution: *const NtSolution, out: *mut u32) -> NtStatus {
    guard(|| {
        let s = in_ref!(solution);
        *out_ref!(out) = s.report.iterations as u32;
        NtStatus::Ok
    })
}

/// `1` if the solve converged, `0` otherwise.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nt_solution_converged(solution: *const NtSolution, out: *mut i32) -> NtStatus {
    guard(|| {
        let s = in_ref!(solution);
        *out_ref!(out) = s.report.converged as i32;
        NtStatus::Ok
    })
}

/// `G(x, q)` with `q = +1` (long) or `-1` (short).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nt_solution_boundary(solution: *const NtSolution, x: f64, q: i32, out: *mut f64) -> NtStatus {
    guard(|| {
        let s = in_ref!(solution);
        let out = out_ref!(out);
        *out = s.boundary.boundary(x, try_status!(position(q)));
        NtStatus::Ok
    })
}

/// `h(x0, x1, q)`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nt_solution_bias(solution: *const NtSolution, x0: f64, x1: f64, q: i32, out: *mut f64) -> NtStatus {
    guard(|| {
        let s = in_ref!(solution);
        let out = out_ref!(out);
        *out = reconstruct_bias(&s.boundary, x0, x1, try_status!(position(q)));
        NtStatus::Ok
    })
}

/// Position to hold next (`+1` or `-1`).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nt_solution_decide(solution: *const NtSolution, x0: f64, x1: f64, q: i32, out: *mut i32) -> NtStatus {
    guard(|| {
        let s = in_ref!(solution);
        let out = out_ref!(out);
        let q = try_status!(position(q));
        let long = x1 >= s.boundary.boundary(x0, q);
        *out = if long { 1 } else { -1 };
        NtStatus::Ok
    })
}

/// Number of grid nodes in the tabulation.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nt_solution_grid_len(solution: *const NtSolution, out: *mut usize) -> NtStatus {
    guard(|| {
        let s = in_ref!(solution);
        *out_ref!(out) = s.boundary.nodes().len();
        NtStatus::Ok
    })
}

/// Copies nodes, `H` and the long slice of `G` into caller buffers of length `len`.
///
/// # Safety
/// Each buffer must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nt_solution_tabulate(
    solution: *const NtSolution,
    x: *mut f64,
    h: *mut f64,
    g_long: *mut f64,
    len: usize,
) -> NtStatus {
    guard(|| {
        let s = in_ref!(solution);
        if x.is_null() || h.is_null() || g_long.is_null() {
            return fail(NtStatus::NullPointer, "null output buffer");
        }
        let n = s.boundary.nodes().len();
        if len < n {
            return fail(NtStatus::BufferTooSmall, format!("need {n} entries, got {len}"));
        }
        let (xs, hs, gs) = unsafe {
            (
                std::slice::from_raw_parts_mut(x, n),
                std::slice::from_raw_parts_mut(h, n),
                std::slice::from_raw_parts_mut(g_long, n),
            )
        };
        xs.copy_from_slice(s.boundary.nodes());
        hs.copy_from_slice(s.boundary.h().values());
        gs.copy_from_slice(s.boundary.g().values());
        NtStatus::Ok
    })
}

/// Myopic boundary.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nt_naive_boundary(rho0: f64, rho1: f64, cost: f64, x: f64, q: i32, out: *mut f64) -> NtStatus {
    guard(|| {
        let out = out_ref!(out);
        let p = try_status!(params(rho0, rho1, cost));
        *out = naive_boundary(x, try_status!(position(q)), &p);
        NtStatus::Ok
    })
}

/// Small-cost first-order boundary.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nt_first_order_boundary(
    rho0: f64,
    rho1: f64,
    cost: f64,
    x: f64,
    q: i32,
    out: *mut f64,
) -> NtStatus {
    guard(|| {
        let out = out_ref!(out);
        let p = try_status!(params(rho0, rho1, cost));
        *out = first_order_boundary(x, try_status!(position(q)), cost, &p);
        NtStatus::Ok
    })
}

/// Simulates the solved policy for `n_steps` periods.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn nt_simulate(solution: *const NtSolution, n_steps: u64, seed: u64, out: *mut NtSimResult) -> NtStatus {
    guard(|| {
        let s = in_ref!(solution);
        let out = out_ref!(out);
        let policy = PolicySpec::solver(&s.boundary);
        let config = SimConfig::new(*s.boundary.params(), n_steps as usize, seed);
        match run_simulation(&policy, &config) {
            Ok(r) => {
                *out = NtSimResult {
                    gross: r.gross,
                    net: r.net,
                    cost: r.cost,
                    switch_rate: r.switch_rate,
                    std_error_gross: r.std_error_gross,
                    std_error_net: r.std_error_net,
                    std_error_cost: r.std_error_cost,
                    n_steps: r.n_steps as u64,
                };
                NtStatus::Ok
            }
            Err(e) => fail(NtStatus::SimulationFailure, e.to_string()),
        }
    })
}

/// Copies the last error message of this thread, NUL-terminated and
/// truncated to fit, into `buf`. Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn nt_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nt_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}
