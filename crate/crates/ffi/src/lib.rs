//! C interface to the planner.
//!
//! Scenarios and simulations live behind opaque handles created and freed
//! by this library. Every fallible call returns an [`EmStatus`]; the
//! message of the last failure on the calling thread is available from
//! [`em_last_error`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use em_planner::output::trace_json;
use em_planner::{run_closed_loop, PlannerConfig, Scenario, Simulation};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidScenario = 3,
    InvalidConfig = 4,
    /// The caller's buffer is too small; the required length was written.
    BufferTooSmall = 5,
    /// No cycle has been planned yet.
    NoTrajectory = 6,
    Panic = 7,
}

/// Parsed and validated scenario.
pub struct EmScenario {
    inner: Scenario,
}

/// Closed loop over a scenario, advanced with [`em_simulation_step`].
pub struct EmSimulation {
    sim: Simulation,
    last: Option<em_planner::Trajectory>,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EmTrajectoryPoint {
    /// Seconds since the start of the cycle.
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub kappa: f64,
    pub v: f64,
    pub a: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EmCycleSummary {
    pub cycle: usize,
    /// Simulation time at the start of the cycle, seconds.
    pub time: f64,
    /// Index of the chosen lane in scenario order, or -1 on a comfort stop.
    pub chosen_lane: i32,
    pub fallback: bool,
    pub point_count: usize,
    pub plan_us: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn fail(status: EmStatus, message: impl Into<String>) -> EmStatus {
    set_error(message);
    status
}

fn guard(body: impl FnOnce() -> EmStatus) -> EmStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(EmStatus::Panic, "internal panic"),
    }
}

/// # Safety
/// `text` must be null or a valid NUL-terminated string.
unsafe fn read_str<'a>(text: *const c_char) -> Result<&'a str, EmStatus> {
    if text.is_null() {
        return Err(fail(EmStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(text).to_str().map_err(|e| fail(EmStatus::InvalidUtf8, e.to_string()))
}

/// # Safety
/// `toml` must be null or a valid NUL-terminated string.
unsafe fn read_config(toml: *const c_char) -> Result<PlannerConfig, EmStatus> {
    if toml.is_null() {
        return Ok(PlannerConfig::default());
    }
    PlannerConfig::from_toml_str(read_str(toml)?).map_err(|e| fail(EmStatus::InvalidConfig, e.to_string()))
}

/// Message describing the last failure on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn em_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn em_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a scenario document.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn em_scenario_from_json(json: *const c_char, out: *mut *mut EmScenario) -> EmStatus {
    guard(|| {
        if out.is_null() {
            return fail(EmStatus::NullPointer, "null output handle");
        }
        *out = ptr::null_mut();
        let text = match read_str(json) {
            Ok(t) => t,
            Err(status) => return status,
        };
        match Scenario::from_json(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(EmScenario { inner }));
                EmStatus::Ok
            }
            Err(e) => fail(EmStatus::InvalidScenario, e.to_string()),
        }
    })
}

/// Cycle count the scenario asks for, or 0 for a null handle.
///
/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn em_scenario_cycles(scenario: *const EmScenario) -> usize {
    scenario.as_ref().map_or(0, |s| s.inner.sim.cycles)
}

/// # Safety
/// `scenario` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn em_scenario_free(scenario: *mut EmScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Starts a closed loop. `config_toml` may be null for the defaults. The
/// simulation keeps its own copy of the scenario.
///
/// # Safety
/// `scenario` must be a live handle, `config_toml` null or a valid string,
/// and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn em_simulation_new(
    scenario: *const EmScenario,
    config_toml: *const c_char,
    out: *mut *mut EmSimulation,
) -> EmStatus {
    guard(|| {
        if out.is_null() {
            return fail(EmStatus::NullPointer, "null output handle");
        }
        *out = ptr::null_mut();
        let Some(scenario) = scenario.as_ref() else {
            return fail(EmStatus::NullPointer, "null scenario");
        };
        let config = match read_config(config_toml) {
            Ok(c) => c,
            Err(status) => return status,
        };
        let sim = Simulation::new(scenario.inner.clone(), config);
        *out = Box::into_raw(Box::new(EmSimulation { sim, last: None }));
        EmStatus::Ok
    })
}

/// Plans one cycle and advances the ego. `summary` may be null.
///
/// # Safety
/// `sim` must be a live handle and `summary` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn em_simulation_step(sim: *mut EmSimulation, summary: *mut EmCycleSummary) -> EmStatus {
    guard(|| {
        let Some(handle) = sim.as_mut() else {
            return fail(EmStatus::NullPointer, "null simulation");
        };
        let (record, timings) = handle.sim.step();
        let result = record.result;
        let chosen = result
            .chosen_lane
            .as_ref()
            .and_then(|id| handle.sim.scenario().lanes.iter().position(|l| &l.lane_id == id))
            .map_or(-1, |i| i as i32);
        if let Some(summary) = summary.as_mut() {
            *summary = EmCycleSummary {
                cycle: record.cycle,
                time: result.time,
                chosen_lane: chosen,
                fallback: result.fallback,
                point_count: result.trajectory.points.len(),
                plan_us: timings.total_us,
            };
        }
        handle.last = Some(result.trajectory);
        EmStatus::Ok
    })
}

/// Copies the trajectory of the last planned cycle into `buffer`. On
/// `EM_STATUS_BUFFER_TOO_SMALL` nothing is copied and `written` holds the
/// required length.
///
/// # Safety
/// `sim` must be a live handle, `buffer` valid for `capacity` writes (or
/// null when `capacity` is 0) and `written` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn em_simulation_trajectory(
    sim: *const EmSimulation,
    buffer: *mut EmTrajectoryPoint,
    capacity: usize,
    written: *mut usize,
) -> EmStatus {
    guard(|| {
        let (Some(handle), false) = (sim.as_ref(), written.is_null()) else {
            return fail(EmStatus::NullPointer, "null simulation or length pointer");
        };
        let Some(trajectory) = &handle.last else {
            *written = 0;
            return fail(EmStatus::NoTrajectory, "no cycle has been planned");
        };
        let n = trajectory.points.len();
        *written = n;
        if capacity < n {
            return fail(EmStatus::BufferTooSmall, format!("{n} points needed, capacity {capacity}"));
        }
        if n > 0 && buffer.is_null() {
            return fail(EmStatus::NullPointer, "null buffer");
        }
        for (i, p) in trajectory.points.iter().enumerate() {
            *buffer.add(i) =
                EmTrajectoryPoint { t: p.t, x: p.x, y: p.y, heading: p.heading, kappa: p.kappa, v: p.v, a: p.a };
        }
        EmStatus::Ok
    })
}

/// # Safety
/// `sim` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn em_simulation_free(sim: *mut EmSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Runs `cycles` cycles (the scenario's own count when 0) and returns the
/// trace as a JSON string to be released with [`em_string_free`].
///
/// # Safety
/// `scenario` must be a live handle, `config_toml` null or a valid string,
/// and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn em_run_trace_json(
    scenario: *const EmScenario,
    cycles: usize,
    config_toml: *const c_char,
    out: *mut *mut c_char,
) -> EmStatus {
    guard(|| {
        if out.is_null() {
            return fail(EmStatus::NullPointer, "null output pointer");
        }
        *out = ptr::null_mut();
        let Some(scenario) = scenario.as_ref() else {
            return fail(EmStatus::NullPointer, "null scenario");
        };
        let config = match read_config(config_toml) {
            Ok(c) => c,
            Err(status) => return status,
        };
        let trace = run_closed_loop(&scenario.inner, &config, (cycles > 0).then_some(cycles));
        match CString::new(trace_json(&trace)) {
            Ok(text) => {
                *out = text.into_raw();
                EmStatus::Ok
            }
            Err(e) => fail(EmStatus::Panic, e.to_string()),
        }
    })
}

/// # Safety
/// `text` must be null or a string returned by this library and not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn em_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(CString::from_raw(text));
    }
}
