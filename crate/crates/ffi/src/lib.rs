//! C ABI over the edgeverse solver.
//!
//! Scenarios and solve results are opaque heap handles created by `ev_*`
//! constructors and released with the matching `*_free`. Every fallible call
//! returns an [`EvStatus`]; on failure [`ev_last_error_message`] describes the
//! most recent error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use edgeverse::optimizer::{self, SolveOptions, SolveResult, Strategy};
use edgeverse::scenario::{self, Scenario, ScenarioOverrides};
use edgeverse::Error;

/// Opaque scenario handle.
pub struct EvScenario(Scenario);

/// Opaque solve result handle.
pub struct EvSolveResult(SolveResult);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvStatus {
    Ok = 0,
    InvalidArgument = 1,
    Parse = 2,
    Validation = 3,
    Capacity = 4,
    SolverFailure = 5,
    Usage = 6,
    Io = 7,
    NullPointer = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvStrategy {
    OptimalLatencyEarning = 0,
    OptimalEarning = 1,
    OptimalLatency = 2,
    Random = 3,
}

impl From<EvStrategy> for Strategy {
    fn from(s: EvStrategy) -> Strategy {
        match s {
            EvStrategy::OptimalLatencyEarning => Strategy::OptimalLatencyEarning,
            EvStrategy::OptimalEarning => Strategy::OptimalEarning,
            EvStrategy::OptimalLatency => Strategy::OptimalLatency,
            EvStrategy::Random => Strategy::Random,
        }
    }
}

/// Generator overrides. A NaN field keeps the generator default; a range
/// applies only when neither end is NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EvOverrides {
    pub uplink_min: f64,
    pub uplink_max: f64,
    pub downlink_min: f64,
    pub downlink_max: f64,
    pub compute_demand_min: f64,
    pub compute_demand_max: f64,
    pub uplink_size: f64,
    pub compute_capacity: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    pub per_user_rates: bool,
}

impl EvOverrides {
    fn to_rust(self) -> ScenarioOverrides {
        let opt = |v: f64| (!v.is_nan()).then_some(v);
        let range = |lo: f64, hi: f64| (!lo.is_nan() && !hi.is_nan()).then_some((lo, hi));
        ScenarioOverrides {
            uplink_range: range(self.uplink_min, self.uplink_max),
            downlink_range: range(self.downlink_min, self.downlink_max),
            compute_demand_range: range(self.compute_demand_min, self.compute_demand_max),
            uplink_size: opt(self.uplink_size),
            compute_capacity: opt(self.compute_capacity),
            d_min: opt(self.d_min),
            d_max: opt(self.d_max),
            omega: opt(self.omega),
            alpha: opt(self.alpha),
            beta: opt(self.beta),
            per_user_rates: self.per_user_rates,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EvSolveOptions {
    pub max_iters: u32,
    pub tol: f64,
    pub seed: u64,
    pub samples: u32,
    pub sdr_size_cap: u32,
    pub subsample: bool,
    pub allow_fallback: bool,
}

impl EvSolveOptions {
    fn to_rust(self) -> SolveOptions {
        SolveOptions {
            max_iters: self.max_iters as usize,
            tol: self.tol,
            seed: self.seed,
            samples: self.samples as usize,
            sdr_size_cap: self.sdr_size_cap as usize,
            subsample: self.subsample,
            allow_fallback: self.allow_fallback,
            ..Default::default()
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EvMetrics {
    pub total_latency: f64,
    pub total_earning: f64,
    pub utility: f64,
    pub iterations: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> EvStatus {
    match e {
        Error::InvalidArgument(_) => EvStatus::InvalidArgument,
        Error::Parse { .. } | Error::Csv(_) => EvStatus::Parse,
        Error::Validation(_) => EvStatus::Validation,
        Error::Capacity { .. } => EvStatus::Capacity,
        Error::SolverFailure { .. } => EvStatus::SolverFailure,
        Error::Usage(_) => EvStatus::Usage,
        Error::Io(_) => EvStatus::Io,
    }
}

struct Fail(EvStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Fail {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(EvStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> EvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EvStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            EvStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(EvStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ev_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ev_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Overrides with every field unset.
#[no_mangle]
pub extern "C" fn ev_overrides_default() -> EvOverrides {
    EvOverrides {
        uplink_min: f64::NAN,
        uplink_max: f64::NAN,
        downlink_min: f64::NAN,
        downlink_max: f64::NAN,
        compute_demand_min: f64::NAN,
        compute_demand_max: f64::NAN,
        uplink_size: f64::NAN,
        compute_capacity: f64::NAN,
        d_min: f64::NAN,
        d_max: f64::NAN,
        omega: f64::NAN,
        alpha: f64::NAN,
        beta: f64::NAN,
        per_user_rates: false,
    }
}

#[no_mangle]
pub extern "C" fn ev_solve_options_default() -> EvSolveOptions {
    let d = SolveOptions::default();
    EvSolveOptions {
        max_iters: d.max_iters as u32,
        tol: d.tol,
        seed: d.seed,
        samples: d.samples as u32,
        sdr_size_cap: d.sdr_size_cap as u32,
        subsample: d.subsample,
        allow_fallback: d.allow_fallback,
    }
}

/// Random scenario. `overrides` may be null.
///
/// # Safety
/// `overrides` must be null or point to a valid `EvOverrides`; `out` must be
/// a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ev_scenario_generate(
    n_users: usize,
    n_servers: usize,
    seed: u64,
    overrides: *const EvOverrides,
    out: *mut *mut EvScenario,
) -> EvStatus {
    guard(|| {
        let o = overrides.as_ref().map(|o| o.to_rust());
        let s = scenario::generate_scenario(n_users, n_servers, seed, o.as_ref())?;
        put(out, EvScenario(s))
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ev_scenario_from_json(json: *const c_char, out: *mut *mut EvScenario) -> EvStatus {
    guard(|| {
        let s = Scenario::from_json(str_arg(json, "json")?)?;
        put(out, EvScenario(s))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ev_scenario_load(path: *const c_char, out: *mut *mut EvScenario) -> EvStatus {
    guard(|| {
        let s = scenario::load_scenario(Path::new(str_arg(path, "path")?))?;
        put(out, EvScenario(s))
    })
}

/// # Safety
/// `s` must be a live scenario handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ev_scenario_save(s: *const EvScenario, path: *const c_char) -> EvStatus {
    guard(|| {
        let s = deref(s, "scenario")?;
        scenario::save_scenario(&s.0, Path::new(str_arg(path, "path")?))?;
        Ok(())
    })
}

/// Number of users, or zero for a null handle.
///
/// # Safety
/// `s` must be null or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn ev_scenario_n_users(s: *const EvScenario) -> usize {
    s.as_ref().map_or(0, |s| s.0.n_users)
}

/// Number of servers, or zero for a null handle.
///
/// # Safety
/// `s` must be null or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn ev_scenario_n_servers(s: *const EvScenario) -> usize {
    s.as_ref().map_or(0, |s| s.0.n_servers)
}

/// # Safety
/// `s` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ev_scenario_free(s: *mut EvScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Solves `s` with `strategy`. `options` may be null for defaults.
///
/// # Safety
/// `s` must be a live scenario handle, `options` null or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ev_solve(
    s: *const EvScenario,
    strategy: EvStrategy,
    options: *const EvSolveOptions,
    out: *mut *mut EvSolveResult,
) -> EvStatus {
    guard(|| {
        let s = deref(s, "scenario")?;
        let opts = options.as_ref().map_or_else(SolveOptions::default, |o| o.to_rust());
        let r = optimizer::solve(&s.0, strategy.into(), &opts)?;
        put(out, EvSolveResult(r))
    })
}

/// # Safety
/// `r` must be a live result handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ev_result_metrics(r: *const EvSolveResult, out: *mut EvMetrics) -> EvStatus {
    guard(|| {
        let r = deref(r, "result")?;
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        *out = EvMetrics {
            total_latency: r.0.metrics.total_latency,
            total_earning: r.0.metrics.total_earning,
            utility: r.0.metrics.utility,
            iterations: r.0.iterations as u32,
        };
        Ok(())
    })
}

/// Number of users in the result.
///
/// # Safety
/// `r` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn ev_result_n_users(r: *const EvSolveResult) -> usize {
    r.as_ref().map_or(0, |r| r.0.assignment.len())
}

/// Length of the utility trace (zero for strategies without one).
///
/// # Safety
/// `r` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn ev_result_trace_len(r: *const EvSolveResult) -> usize {
    r.as_ref().map_or(0, |r| r.0.utility_trace.len())
}

unsafe fn copy_out<T: Copy>(src: &[T], buf: *mut T, len: usize) -> Result<(), Fail> {
    if buf.is_null() {
        return Err(null("buffer"));
    }
    if len < src.len() {
        return Err(Fail(
            EvStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Copies each user's server index into `buf`, which holds `len` entries.
///
/// # Safety
/// `r` must be a live result handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn ev_result_assignment(r: *const EvSolveResult, buf: *mut usize, len: usize) -> EvStatus {
    guard(|| copy_out(&deref(r, "result")?.0.assignment.server_of, buf, len))
}

/// Copies each user's data size into `buf`.
///
/// # Safety
/// `r` must be a live result handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn ev_result_plan(r: *const EvSolveResult, buf: *mut f64, len: usize) -> EvStatus {
    guard(|| copy_out(&deref(r, "result")?.0.plan.d, buf, len))
}

/// Copies the utility trace into `buf`.
///
/// # Safety
/// `r` must be a live result handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn ev_result_trace(r: *const EvSolveResult, buf: *mut f64, len: usize) -> EvStatus {
    guard(|| {
        let r = deref(r, "result")?;
        copy_out(&r.0.utility_trace, buf, len)
    })
}

/// # Safety
/// `r` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ev_result_free(r: *mut EvSolveResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}
