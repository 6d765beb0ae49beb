//! C interface to `smess-core`.
//!
//! Scenarios and schedules cross the boundary as opaque handles created and
//! released by this library. Every fallible call returns a [`SmessStatus`];
//! the message of the most recent failure on the calling thread is
//! available from [`smess_last_error`]. Strings returned to the caller must
//! be released with [`smess_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use smess_core::assembly::{assemble, with_case};
use smess_core::scenario::{parse_scenario, CaseTag, Scenario};
use smess_core::solver::{solve, Backend, Schedule, SolveOptions};
use smess_core::validate::{brute_force_optimal, check_schedule, recompute_objective};
use smess_core::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmessStatus {
    Ok = 0,
    /// Schedule violates the model, or no feasible schedule exists.
    Violation = 1,
    /// Malformed scenario, schedule or argument.
    Input = 2,
    /// Solver failure.
    Backend = 3,
    NullPointer = 4,
    /// Rust panic caught at the boundary.
    Internal = 5,
}

/// Parsed scenario.
pub struct SmessScenario(Scenario);

/// Schedule returned by [`smess_solve`] or [`smess_schedule_from_json`].
pub struct SmessSchedule(Schedule);

/// Solver settings. `backend` is 0 for HiGHS, 1 for CBC.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SmessSolveOptions {
    pub gap: f64,
    pub time_limit_s: f64,
    pub backend: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SmessStatus {
    match e {
        Error::BackendMissing { .. } | Error::Backend { .. } | Error::FractionalBinary { .. } | Error::Model(_) => SmessStatus::Backend,
        _ => SmessStatus::Input,
    }
}

/// Run `f`, record any error or panic, and map it to a status.
fn guard(f: impl FnOnce() -> Result<SmessStatus, (SmessStatus, String)>) -> SmessStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("panic inside smess".into());
            SmessStatus::Internal
        }
    }
}

fn core_err(e: Error) -> (SmessStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (SmessStatus, String) {
    (SmessStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (SmessStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|e| (SmessStatus::Input, format!("{what}: {e}")))
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message of the last failure on this thread, or null. Owned by the
/// library; valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn smess_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn smess_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parse a scenario document. On success `*out` owns a new handle.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn smess_scenario_parse(json: *const c_char, out: *mut *mut SmessScenario) -> SmessStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = read_str(json, "json")?;
        let s = parse_scenario(text).map_err(core_err)?;
        *out = Box::into_raw(Box::new(SmessScenario(s)));
        Ok(SmessStatus::Ok)
    })
}

/// # Safety
/// `scenario` must come from [`smess_scenario_parse`] or be null.
#[no_mangle]
pub unsafe extern "C" fn smess_scenario_free(scenario: *mut SmessScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Select the case variant, 1 to 5.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn smess_scenario_set_case(scenario: *mut SmessScenario, case: u32) -> SmessStatus {
    guard(|| {
        let s = scenario.as_mut().ok_or_else(|| null("scenario"))?;
        let tag: CaseTag = case.to_string().parse().map_err(|m: String| (SmessStatus::Input, m))?;
        s.0 = with_case(&s.0, tag);
        Ok(SmessStatus::Ok)
    })
}

/// Default solver settings.
#[no_mangle]
pub extern "C" fn smess_solve_options_default() -> SmessSolveOptions {
    let d = SolveOptions::default();
    SmessSolveOptions {
        gap: d.gap,
        time_limit_s: d.time_limit,
        backend: match d.backend {
            Backend::Highs => 0,
            Backend::Cbc => 1,
        },
    }
}

/// Build and solve the scenario. On `SMESS_STATUS_OK`, `*schedule` owns a
/// new handle and `*objective` holds the incumbent value. Returns
/// `SMESS_STATUS_VIOLATION` with `*schedule` null when no schedule exists.
///
/// # Safety
/// `scenario` must be a live handle; `schedule` and `objective` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn smess_solve(
    scenario: *const SmessScenario,
    options: SmessSolveOptions,
    schedule: *mut *mut SmessSchedule,
    objective: *mut f64,
) -> SmessStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        if schedule.is_null() || objective.is_null() {
            return Err(null("output"));
        }
        *schedule = ptr::null_mut();
        let backend = match options.backend {
            0 => Backend::Highs,
            1 => Backend::Cbc,
            b => return Err((SmessStatus::Input, format!("unknown backend {b}"))),
        };
        let opts = SolveOptions {
            gap: options.gap,
            time_limit: options.time_limit_s,
            backend,
            ..Default::default()
        };
        let a = assemble(&s.0).map_err(core_err)?;
        let r = solve(&a, &opts).map_err(core_err)?;
        match (r.schedule, r.objective) {
            (Some(sched), Some(obj)) => {
                *objective = obj;
                *schedule = Box::into_raw(Box::new(SmessSchedule(sched)));
                Ok(SmessStatus::Ok)
            }
            _ => Err((SmessStatus::Violation, format!("no schedule: {}", r.status))),
        }
    })
}

/// # Safety
/// `schedule` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn smess_schedule_free(schedule: *mut SmessSchedule) {
    if !schedule.is_null() {
        drop(Box::from_raw(schedule));
    }
}

/// Schedule as JSON; release with [`smess_string_free`]. Null on failure.
///
/// # Safety
/// `schedule` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn smess_schedule_to_json(schedule: *const SmessSchedule) -> *mut c_char {
    match schedule.as_ref() {
        Some(s) => to_c_string(s.0.to_json()),
        None => {
            set_error("schedule is null".into());
            ptr::null_mut()
        }
    }
}

/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn smess_schedule_from_json(json: *const c_char, out: *mut *mut SmessSchedule) -> SmessStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = read_str(json, "json")?;
        let s = Schedule::from_json(text).map_err(core_err)?;
        *out = Box::into_raw(Box::new(SmessSchedule(s)));
        Ok(SmessStatus::Ok)
    })
}

/// Check `schedule` against `scenario`. Returns `SMESS_STATUS_OK` when no
/// constraint is violated beyond `tolerance`, `SMESS_STATUS_VIOLATION`
/// otherwise; `*violations` receives the count.
///
/// # Safety
/// Handles must be live; `violations` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn smess_validate(
    scenario: *const SmessScenario,
    schedule: *const SmessSchedule,
    tolerance: f64,
    violations: *mut usize,
) -> SmessStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        let sched = schedule.as_ref().ok_or_else(|| null("schedule"))?;
        if violations.is_null() {
            return Err(null("violations"));
        }
        let report = check_schedule(&s.0, &sched.0, tolerance).map_err(core_err)?;
        *violations = report.violations.len();
        Ok(if report.pass() { SmessStatus::Ok } else { SmessStatus::Violation })
    })
}

/// Objective of `schedule` recomputed from the scenario.
///
/// # Safety
/// Handles must be live; `objective` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn smess_objective(scenario: *const SmessScenario, schedule: *const SmessSchedule, objective: *mut f64) -> SmessStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        let sched = schedule.as_ref().ok_or_else(|| null("schedule"))?;
        if objective.is_null() {
            return Err(null("objective"));
        }
        *objective = recompute_objective(&s.0, &sched.0).total;
        Ok(SmessStatus::Ok)
    })
}

/// Exhaustive optimum of a tiny scenario. Returns `SMESS_STATUS_VIOLATION`
/// when the scenario has no feasible schedule.
///
/// # Safety
/// `scenario` must be a live handle; `objective` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn smess_oracle(scenario: *const SmessScenario, objective: *mut f64) -> SmessStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        if objective.is_null() {
            return Err(null("objective"));
        }
        match brute_force_optimal(&s.0).map_err(core_err)?.objective {
            Some(v) => {
                *objective = v;
                Ok(SmessStatus::Ok)
            }
            None => Err((SmessStatus::Violation, "infeasible".into())),
        }
    })
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn smess_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
