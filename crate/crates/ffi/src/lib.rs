//! C interface to `tsnbridge`.
//!
//! Scenarios and run results live behind opaque handles. Every fallible
//! call returns a [`TsnStatus`]; on failure, [`tsn_last_error`] describes
//! the problem for the calling thread. Strings handed out by the library
//! must be released with [`tsn_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use tsnbridge::bridge_delay::{dynamic_bd_bounds, static_bd_bounds, DelayParams};
use tsnbridge::scenario::{preset, validate, Scenario, SchedulerSpec};
use tsnbridge::sim::output::{frames_csv, summary_json, write_run, Format};
use tsnbridge::sim::{run, RunOutput, SimError};
use tsnbridge::time::{Duration, Fraction, TddPattern};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TsnStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Validation = 4,
    Admission = 5,
    Runtime = 6,
    Io = 7,
    Panic = 8,
}

/// A scenario description.
pub struct TsnScenario {
    inner: Scenario,
}

/// Traces and summary of one simulation run.
pub struct TsnRun {
    inner: RunOutput,
}

/// Bridge delay bounds in nanoseconds.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TsnBounds {
    pub min_ns: u64,
    pub max_ns: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).unwrap_or_default());
}

struct Fail(TsnStatus, String);

impl Fail {
    fn new(status: TsnStatus, msg: impl ToString) -> Self {
        Fail(status, msg.to_string())
    }
}

/// Runs `f`, recording its error message and turning panics into
/// [`TsnStatus::Panic`].
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TsnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            TsnStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            TsnStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::new(TsnStatus::NullArgument, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Fail::new(TsnStatus::InvalidUtf8, e))
}

unsafe fn out_ptr<'a, T>(p: *mut T) -> Result<&'a mut T, Fail> {
    p.as_mut()
        .ok_or_else(|| Fail::new(TsnStatus::NullArgument, "null output pointer"))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail::new(TsnStatus::NullArgument, "null handle"))
}

fn to_c(bytes: Vec<u8>) -> Result<*mut c_char, Fail> {
    CString::new(bytes)
        .map(CString::into_raw)
        .map_err(|e| Fail::new(TsnStatus::Runtime, e))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn tsn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tsn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Creates a built-in scenario (`periodic` or `heterogeneous`).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tsn_scenario_preset(name: *const c_char, out: *mut *mut TsnScenario) -> TsnStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let name = text(name)?;
        let s = preset(name).ok_or_else(|| Fail::new(TsnStatus::Parse, format!("unknown preset {name:?}")))?;
        *out = Box::into_raw(Box::new(TsnScenario { inner: s }));
        Ok(())
    })
}

/// Parses a scenario from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tsn_scenario_from_json(json: *const c_char, out: *mut *mut TsnScenario) -> TsnStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let s = Scenario::from_json(text(json)?).map_err(|e| Fail::new(TsnStatus::Parse, e))?;
        *out = Box::into_raw(Box::new(TsnScenario { inner: s }));
        Ok(())
    })
}

/// Serializes the scenario to JSON.
///
/// # Safety
/// `s` must be a live scenario handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tsn_scenario_to_json(s: *const TsnScenario, out: *mut *mut c_char) -> TsnStatus {
    guard(|| {
        let out = out_ptr(out)?;
        *out = to_c(handle(s)?.inner.to_json().into_bytes())?;
        Ok(())
    })
}

/// Replaces the scheduler, e.g. `gf_static:20` or
/// `gf_adaptive+dynamic:max_ci`.
///
/// # Safety
/// `s` must be a live scenario handle and `spec` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tsn_scenario_set_scheduler(s: *mut TsnScenario, spec: *const c_char) -> TsnStatus {
    guard(|| {
        let s = out_ptr(s)?;
        let spec: SchedulerSpec = text(spec)?.parse().map_err(|e| Fail::new(TsnStatus::Parse, e))?;
        s.inner.scheduler = spec;
        Ok(())
    })
}

/// Validates the scenario. `report_json` (which may be null) receives the
/// full error and warning list; the status is `Validation` when there are
/// errors.
///
/// # Safety
/// `s` must be a live scenario handle; `report_json` is null or valid.
#[no_mangle]
pub unsafe extern "C" fn tsn_scenario_validate(s: *const TsnScenario, report_json: *mut *mut c_char) -> TsnStatus {
    guard(|| {
        let r = validate(&handle(s)?.inner);
        if let Some(out) = report_json.as_mut() {
            *out = to_c(summary_json(&r).map_err(|e| Fail::new(TsnStatus::Runtime, e))?)?;
        }
        match r.errors.first() {
            None => Ok(()),
            Some(e) => Err(Fail::new(
                TsnStatus::Validation,
                format!("{} error(s), first {}: {}", r.errors.len(), e.code, e.message),
            )),
        }
    })
}

/// Releases a scenario. Null is ignored.
///
/// # Safety
/// `s` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tsn_scenario_free(s: *mut TsnScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Simulates the scenario with one seed.
///
/// # Safety
/// `s` must be a live scenario handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tsn_run(s: *const TsnScenario, seed: u64, out: *mut *mut TsnRun) -> TsnStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let o = run(&handle(s)?.inner, seed).map_err(|e| {
            let status = match e {
                SimError::Invalid(_) | SimError::Config(_) => TsnStatus::Validation,
                SimError::Admission(_) => TsnStatus::Admission,
                _ => TsnStatus::Runtime,
            };
            Fail::new(status, e)
        })?;
        *out = Box::into_raw(Box::new(TsnRun { inner: o }));
        Ok(())
    })
}

/// Number of frame records of a run; zero for a null handle.
///
/// # Safety
/// `r` must be null or a live run handle.
#[no_mangle]
pub unsafe extern "C" fn tsn_run_frame_count(r: *const TsnRun) -> usize {
    r.as_ref().map_or(0, |r| r.inner.records.len())
}

/// Run summary as JSON.
///
/// # Safety
/// `r` must be a live run handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tsn_run_summary_json(r: *const TsnRun, out: *mut *mut c_char) -> TsnStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let bytes = summary_json(&handle(r)?.inner.summary).map_err(|e| Fail::new(TsnStatus::Runtime, e))?;
        *out = to_c(bytes)?;
        Ok(())
    })
}

/// Frame trace as CSV.
///
/// # Safety
/// `r` must be a live run handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tsn_run_frames_csv(r: *const TsnRun, out: *mut *mut c_char) -> TsnStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let bytes = frames_csv(&handle(r)?.inner.records).map_err(|e| Fail::new(TsnStatus::Runtime, e))?;
        *out = to_c(bytes)?;
        Ok(())
    })
}

/// Writes the run's trace files into `dir`, as JSON when `json` is true
/// and CSV otherwise.
///
/// # Safety
/// `r` must be a live run handle and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tsn_run_write(r: *const TsnRun, dir: *const c_char, json: bool) -> TsnStatus {
    guard(|| {
        let r = handle(r)?;
        let format = if json { Format::Json } else { Format::Csv };
        write_run(Path::new(text(dir)?), &r.inner, format).map_err(|e| Fail::new(TsnStatus::Io, e))
    })
}

/// Releases a run. Null is ignored.
///
/// # Safety
/// `r` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tsn_run_free(r: *mut TsnRun) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

unsafe fn bounds_call(
    pattern: *const c_char,
    mu: u8,
    n_rb: u32,
    delta_ns: u64,
    out: *mut TsnBounds,
    f: impl FnOnce(&TddPattern, DelayParams) -> Result<(Duration, Duration), String>,
) -> TsnStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let p = TddPattern::parse(text(pattern)?, mu, n_rb, Fraction::ONE).map_err(|e| Fail::new(TsnStatus::Parse, e))?;
        let (min, max) = f(
            &p,
            DelayParams {
                delta: Duration::from_ns(delta_ns),
            },
        )
        .map_err(|e| Fail::new(TsnStatus::Parse, e))?;
        *out = TsnBounds {
            min_ns: min.as_ns(),
            max_ns: max.as_ns(),
        };
        Ok(())
    })
}

/// Dynamic-scheduling bridge delay of a TDD pattern such as `DDDSU`.
///
/// # Safety
/// `pattern` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tsn_dynamic_bd(
    pattern: *const c_char,
    mu: u8,
    delta_ns: u64,
    bs_known: bool,
    out: *mut TsnBounds,
) -> TsnStatus {
    bounds_call(pattern, mu, 1, delta_ns, out, |p, d| {
        dynamic_bd_bounds(p, d, bs_known)
            .map(|b| (b.min, b.max))
            .map_err(|e| e.to_string())
    })
}

/// Grant-free bridge delay; `single_slot` selects the pinned-slot case.
///
/// # Safety
/// `pattern` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tsn_static_bd(
    pattern: *const c_char,
    mu: u8,
    delta_ns: u64,
    single_slot: bool,
    out: *mut TsnBounds,
) -> TsnStatus {
    bounds_call(pattern, mu, 1, delta_ns, out, |p, d| {
        static_bd_bounds(p, d, single_slot)
            .map(|b| (b.min, b.max))
            .map_err(|e| e.to_string())
    })
}
