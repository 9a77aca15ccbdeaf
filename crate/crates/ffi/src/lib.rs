// SPDX-License-Identifier: Apache-2.0

//! C interface to `fmpulse`.
//!
//! Pulses and trajectories cross the boundary as opaque handles that the
//! caller releases with the matching `*_free` function. Every fallible call
//! returns an [`FmStatus`]; the message of the most recent failure on the
//! calling thread is available from [`fm_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use fmpulse::conditions::{self, ConditionResiduals};
use fmpulse::kinematics::{self, RotationTrajectory};
use fmpulse::solver::{self, SolveConfig};
use fmpulse::verifier::{self, BathSpec};
use fmpulse::{tables, Error, PulseSpec};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Domain = 3,
    Parse = 4,
    InvalidSteps = 5,
    Singularity = 6,
    Config = 7,
    NoConvergence = 8,
    NotFound = 9,
    OutOfRange = 10,
    Panic = 11,
}

/// Opaque pulse handle.
pub struct FmPulse(PulseSpec);

/// Opaque trajectory handle.
pub struct FmTrajectory(RotationTrajectory);

/// One trajectory sample.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FmSample {
    pub t: f64,
    pub psi: f64,
    pub theta: f64,
    pub varphi: f64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
}

/// All residuals of one trajectory.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FmResiduals {
    pub eta11: f64,
    pub eta12: f64,
    pub eta13: f64,
    pub eta21: f64,
    pub eta22: f64,
    pub eta23: f64,
    pub eta24: f64,
    pub eta25: f64,
    pub eta26: f64,
    pub bc_psi: f64,
    pub bc_theta: f64,
}

impl From<ConditionResiduals> for FmResiduals {
    fn from(r: ConditionResiduals) -> Self {
        FmResiduals {
            eta11: r.eta11,
            eta12: r.eta12,
            eta13: r.eta13,
            eta21: r.eta21,
            eta22: r.eta22,
            eta23: r.eta23,
            eta24: r.eta24,
            eta25: r.eta25,
            eta26: r.eta26,
            bc_psi: r.bc_psi,
            bc_theta: r.bc_theta,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let text = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn status_of(e: &Error) -> FmStatus {
    match e {
        Error::Domain(_) | Error::InvalidParameter(_) | Error::Pauli(_) => FmStatus::Domain,
        Error::Parse { .. } | Error::MissingKey(_) => FmStatus::Parse,
        Error::InvalidSteps { .. } | Error::StepsTooSmall { .. } => FmStatus::InvalidSteps,
        Error::Singularity { .. } | Error::AmbiguousUnwrap { .. } => FmStatus::Singularity,
        Error::Config(_) | Error::TooFewPoints { .. } => FmStatus::Config,
        Error::Bracket { .. } => FmStatus::NoConvergence,
        Error::Io(_) => FmStatus::Domain,
    }
}

/// Runs `f`, recording the error message and converting panics.
fn guard<F>(f: F) -> FmStatus
where
    F: FnOnce() -> Result<(), (FmStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FmStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            FmStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (FmStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (FmStatus, String) {
    (FmStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, (FmStatus, String)> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| (FmStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn pulse_ref<'a>(p: *const FmPulse) -> Result<&'a PulseSpec, (FmStatus, String)> {
    p.as_ref().map(|h| &h.0).ok_or_else(|| null("pulse"))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), (FmStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn fm_status_str(status: FmStatus) -> *const c_char {
    let s: &'static CStr = match status {
        FmStatus::Ok => c"ok",
        FmStatus::NullPointer => c"null pointer",
        FmStatus::InvalidUtf8 => c"invalid UTF-8",
        FmStatus::Domain => c"domain error",
        FmStatus::Parse => c"parse error",
        FmStatus::InvalidSteps => c"invalid step count",
        FmStatus::Singularity => c"singular chart or ambiguous unwrap",
        FmStatus::Config => c"configuration error",
        FmStatus::NoConvergence => c"no convergence",
        FmStatus::NotFound => c"not found",
        FmStatus::OutOfRange => c"index out of range",
        FmStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Flat pulse with no phase coefficients.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn fm_pulse_new(chi: f64, v0: f64, out: *mut *mut FmPulse) -> FmStatus {
    guard(|| store(out, FmPulse(PulseSpec::new(chi, v0).map_err(lib_err)?)))
}

/// Built-in published pulse, looked up case-insensitively.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` as for [`fm_pulse_new`].
#[no_mangle]
pub unsafe extern "C" fn fm_pulse_builtin(name: *const c_char, out: *mut *mut FmPulse) -> FmStatus {
    guard(|| {
        let name = read_str(name, "name")?;
        let p = tables::builtin(name).ok_or_else(|| (FmStatus::NotFound, format!("no built-in pulse `{name}`")))?;
        store(out, FmPulse(p))
    })
}

/// Parses pulse-file text.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` as for [`fm_pulse_new`].
#[no_mangle]
pub unsafe extern "C" fn fm_pulse_parse(text: *const c_char, out: *mut *mut FmPulse) -> FmStatus {
    guard(|| {
        let text = read_str(text, "text")?;
        store(out, FmPulse(PulseSpec::parse(text).map_err(lib_err)?))
    })
}

/// Serializes a pulse; release the string with [`fm_string_free`].
///
/// # Safety
/// `pulse` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn fm_pulse_serialize(pulse: *const FmPulse, out: *mut *mut c_char) -> FmStatus {
    guard(|| {
        let p = pulse_ref(pulse)?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let s = CString::new(p.serialize()).map_err(|_| (FmStatus::Domain, "label contains NUL".to_owned()))?;
        *out = s.into_raw();
        Ok(())
    })
}

/// # Safety
/// `pulse` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn fm_pulse_set_coeff(pulse: *mut FmPulse, index: usize, value: f64) -> FmStatus {
    guard(|| {
        let p = pulse.as_mut().ok_or_else(|| null("pulse"))?;
        p.0.set_coeff(index, value).map_err(lib_err)
    })
}

/// `b_index`, zero when absent or when `pulse` is null.
///
/// # Safety
/// `pulse` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fm_pulse_coeff(pulse: *const FmPulse, index: usize) -> f64 {
    pulse.as_ref().map_or(0.0, |p| p.0.coeff(index))
}

/// # Safety
/// `pulse` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fm_pulse_v0(pulse: *const FmPulse) -> f64 {
    pulse.as_ref().map_or(f64::NAN, |p| p.0.v0())
}

/// # Safety
/// `pulse` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fm_pulse_chi(pulse: *const FmPulse) -> f64 {
    pulse.as_ref().map_or(f64::NAN, |p| p.0.chi())
}

/// # Safety
/// `pulse` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fm_pulse_free(pulse: *mut FmPulse) {
    if !pulse.is_null() {
        drop(Box::from_raw(pulse));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn fm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Integrates the rotation with `steps` uniform RK4 steps.
///
/// # Safety
/// `pulse` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn fm_propagate(pulse: *const FmPulse, steps: usize, out: *mut *mut FmTrajectory) -> FmStatus {
    guard(|| {
        let p = pulse_ref(pulse)?;
        store(out, FmTrajectory(kinematics::propagate_su2(p, steps).map_err(lib_err)?))
    })
}

/// Number of samples, `steps + 1`; zero for null.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fm_trajectory_len(traj: *const FmTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.grid.len())
}

/// # Safety
/// `traj` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn fm_trajectory_sample(
    traj: *const FmTrajectory,
    index: usize,
    out: *mut FmSample,
) -> FmStatus {
    guard(|| {
        let t = &traj.as_ref().ok_or_else(|| null("trajectory"))?.0;
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        let s = t.states.get(index).ok_or_else(|| {
            (FmStatus::OutOfRange, format!("sample {index} outside 0..{}", t.states.len()))
        })?;
        *out = FmSample {
            t: t.grid[index],
            psi: s.psi,
            theta: s.theta,
            varphi: s.varphi,
            ax: s.axis[0],
            ay: s.axis[1],
            az: s.axis[2],
        };
        Ok(())
    })
}

/// # Safety
/// `traj` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fm_trajectory_free(traj: *mut FmTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Every condition and boundary residual of a trajectory.
///
/// # Safety
/// `traj` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn fm_evaluate(traj: *const FmTrajectory, out: *mut FmResiduals) -> FmStatus {
    guard(|| {
        let t = &traj.as_ref().ok_or_else(|| null("trajectory"))?.0;
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        *out = conditions::evaluate(t).map_err(lib_err)?.into();
        Ok(())
    })
}

/// Max-norm over the residuals that apply at `order` (1 or 2).
///
/// # Safety
/// `res` must be null or point to a valid struct.
#[no_mangle]
pub unsafe extern "C" fn fm_residuals_max_abs(res: *const FmResiduals, order: u8) -> f64 {
    let Some(r) = res.as_ref() else { return f64::NAN };
    let mut v = vec![r.eta11, r.eta12, r.eta13, r.bc_psi, r.bc_theta];
    if order >= 2 {
        v.extend([r.eta21, r.eta22, r.eta23, r.eta24, r.eta25, r.eta26]);
    }
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Multi-start solve from the published pulses plus `random_seeds` random
/// starts. Writes the best pulse to `out` even when it did not converge, in
/// which case the status is `NoConvergence`.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn fm_solve(
    order: u8,
    chi: f64,
    grid: usize,
    tol: f64,
    random_seeds: usize,
    rng_seed: u64,
    out: *mut *mut FmPulse,
) -> FmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let mut cfg = SolveConfig::new(order, chi).with_table_seeds().with_random_seeds(random_seeds, rng_seed);
        cfg.grid = grid;
        cfg.tol = tol;
        let res = solver::solve_pulse(&cfg).map_err(lib_err)?;
        let converged = res.converged;
        store(out, FmPulse(res.pulse))?;
        if converged {
            Ok(())
        } else {
            Err((FmStatus::NoConvergence, "no start converged".to_owned()))
        }
    })
}

/// `d(U_c)` for a pulse of duration `tau` on the default one-spin bath with
/// coupling `lambda`.
///
/// # Safety
/// `pulse` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn fm_correction_error(
    pulse: *const FmPulse,
    lambda: f64,
    tau: f64,
    steps: usize,
    out: *mut f64,
) -> FmStatus {
    guard(|| {
        let p = pulse_ref(pulse)?;
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        let bath = BathSpec::default_noncommuting().with_lambda(lambda);
        let set = verifier::evolve_full(p, &bath, tau, steps).map_err(lib_err)?;
        *out = verifier::correction_error(&set);
        Ok(())
    })
}
