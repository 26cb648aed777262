//! C interface to `refract-core`.
//!
//! Solutions are opaque handles created by [`refract_solve_toml`] and released
//! with [`refract_solution_free`]. Every fallible call returns a
//! [`RefractStatus`]; the message of the most recent failure on the calling
//! thread is available from [`refract_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use refract_core::config::ProblemConfig;
use refract_core::recursion::{solve, SolveResult};
use refract_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefractStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ConfigError = 3,
    AssumptionViolated = 4,
    NumericalFailure = 5,
    Panic = 6,
}

impl From<&Error> for RefractStatus {
    fn from(e: &Error) -> Self {
        match e.exit_code() {
            2 => RefractStatus::ConfigError,
            3 => RefractStatus::AssumptionViolated,
            _ => RefractStatus::NumericalFailure,
        }
    }
}

/// Opaque solved problem.
pub struct RefractSolution {
    result: SolveResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn fail(status: RefractStatus, message: impl Into<String>) -> RefractStatus {
    set_error(message.into());
    status
}

fn guarded(f: impl FnOnce() -> RefractStatus) -> RefractStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(RefractStatus::Panic, "internal panic"),
    }
}

fn from_error(e: Error) -> RefractStatus {
    fail(RefractStatus::from(&e), format!("{}: {e}", e.name()))
}

/// Message of the last failure on this thread, or NULL after a success.
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn refract_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses a TOML problem configuration and solves it.
///
/// # Safety
/// `config_toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn refract_solve_toml(
    config_toml: *const c_char,
    out: *mut *mut RefractSolution,
) -> RefractStatus {
    guarded(|| {
        if config_toml.is_null() || out.is_null() {
            return fail(RefractStatus::NullPointer, "null argument");
        }
        *out = ptr::null_mut();
        let Ok(text) = CStr::from_ptr(config_toml).to_str() else {
            return fail(RefractStatus::InvalidArgument, "configuration is not valid UTF-8");
        };
        let solved = ProblemConfig::from_toml_str(text).and_then(|config| {
            let model = config.levy_model()?;
            solve(&model, config.solve_params(), &config.tolerances())
        });
        match solved {
            Ok(result) => {
                *out = Box::into_raw(Box::new(RefractSolution { result }));
                RefractStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Releases a solution. NULL is ignored.
///
/// # Safety
/// `solution` must come from [`refract_solve_toml`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn refract_solution_free(solution: *mut RefractSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Number of stages `N`, or 0 for NULL.
///
/// # Safety
/// `solution` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn refract_solution_stages(solution: *const RefractSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.result.stages.len())
}

/// Threshold of stage `stage` (1-based).
///
/// # Safety
/// `solution` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn refract_solution_threshold(
    solution: *const RefractSolution,
    stage: usize,
    out: *mut f64,
) -> RefractStatus {
    guarded(|| {
        let (Some(s), false) = (solution.as_ref(), out.is_null()) else {
            return fail(RefractStatus::NullPointer, "null argument");
        };
        match stage.checked_sub(1).and_then(|i| s.result.thresholds.get(i)) {
            Some(a) => {
                *out = *a;
                RefractStatus::Ok
            }
            None => fail(RefractStatus::InvalidArgument, format!("stage {stage} out of range")),
        }
    })
}

/// Value function of stage `stage` (1-based) at log-price `x`.
///
/// # Safety
/// `solution` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn refract_solution_evaluate(
    solution: *const RefractSolution,
    stage: usize,
    x: f64,
    out: *mut f64,
) -> RefractStatus {
    guarded(|| {
        let (Some(s), false) = (solution.as_ref(), out.is_null()) else {
            return fail(RefractStatus::NullPointer, "null argument");
        };
        let Some(set) = stage.checked_sub(1).and_then(|i| s.result.stages.get(i)) else {
            return fail(RefractStatus::InvalidArgument, format!("stage {stage} out of range"));
        };
        if !x.is_finite() {
            return fail(RefractStatus::InvalidArgument, "x must be finite");
        }
        match set.evaluate(x) {
            Ok(v) => {
                *out = v;
                RefractStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Seconds spent on the roots and on the recursion.
///
/// # Safety
/// `solution` must be a live handle; the output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn refract_solution_timings(
    solution: *const RefractSolution,
    root_phase: *mut f64,
    recursion_phase: *mut f64,
) -> RefractStatus {
    guarded(|| {
        let Some(s) = solution.as_ref() else {
            return fail(RefractStatus::NullPointer, "null solution");
        };
        if root_phase.is_null() || recursion_phase.is_null() {
            return fail(RefractStatus::NullPointer, "null output");
        }
        *root_phase = s.result.timings.root_phase;
        *recursion_phase = s.result.timings.recursion_phase;
        RefractStatus::Ok
    })
}
