//! C ABI for the teleportation evaluator.
//!
//! The surface is a single opaque handle produced by [`st_evaluation_new`],
//! plain-struct accessors, and integer status codes. Every function is
//! panic-safe: panics are caught at the boundary and reported as
//! [`StStatus::Internal`].

use std::ffi::{c_char, c_int};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use scs_teleport::pipeline::{evaluate_point, EvalParams, PointEvaluation, SituationKind};
use scs_teleport::protocol::FamilySign;
use scs_teleport::Error;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Arguments outside the supported domain.
    InvalidInput = 2,
    /// The requested tail bound cannot be met at this amplitude.
    CutoffTooSmall = 3,
    /// Amplitude leaked past the truncated basis during evolution.
    CutoffLeak = 4,
    /// A state degenerated to zero norm.
    Degenerate = 5,
    /// An internal consistency check failed.
    InvariantViolation = 6,
    /// Unexpected internal failure (caught panic).
    Internal = 7,
}

impl From<&Error> for StStatus {
    fn from(err: &Error) -> Self {
        match err {
            Error::CutoffTooSmall { .. } => StStatus::CutoffTooSmall,
            Error::CutoffLeak { .. } => StStatus::CutoffLeak,
            Error::Degenerate(_) => StStatus::Degenerate,
            Error::Invariant(_) => StStatus::InvariantViolation,
            _ => StStatus::InvalidInput,
        }
    }
}

/// Opaque evaluation result; create with [`st_evaluation_new`], release with
/// [`st_evaluation_free`].
pub struct StEvaluation {
    inner: PointEvaluation,
}

/// Flat summary of one evaluation.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct StPointSummary {
    pub alpha_sq: f64,
    pub theta: f64,
    pub phi: f64,
    /// Vacuum overlap weight e^(−|α|²).
    pub x: f64,
    /// Vacuum probability of the payload.
    pub p_i0: f64,
    /// Channel concurrence.
    pub concurrence: f64,
    /// Herald probabilities: the both-silent case and one branch of each
    /// two-branch family.
    pub p_case_i: f64,
    pub p_nze_each: f64,
    pub p_odd_each: f64,
    /// Fidelity of the discarded both-silent branch.
    pub case_i_fidelity: f64,
    /// Average fidelity from the simulation tree and from the closed forms.
    pub f_avg_sim: f64,
    pub f_avg_closed: f64,
    /// Large-amplitude asymptotic law.
    pub f_avg_asymptotic: f64,
}

/// Family selector for situation queries.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StFamily {
    /// Branches heralded by a nonzero-even count.
    Minus = 0,
    /// Branches heralded by an odd count.
    Plus = 1,
}

/// Terminal-situation selector for situation queries.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StSituation {
    /// Payload delivered directly (atom stays lower, cavity empty).
    DirectSuccess = 0,
    /// Photon-counted failures, aggregated over the count.
    PhotonCounted = 1,
    /// Second-cavity release heralded by the lower readout.
    ReleaseLower = 2,
    /// Second-cavity retention heralded by the upper readout.
    ReleaseUpper = 3,
}

fn run_guarded<F: FnOnce() -> StStatus>(f: F) -> StStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(StStatus::Internal)
}

/// Evaluate the protocol at one parameter point.
///
/// `tail_bound` ≤ 0 selects the default (1e-12). On success `*out` owns the
/// evaluation; free it with [`st_evaluation_free`].
///
/// # Safety
/// `out` must be a valid pointer to writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn st_evaluation_new(
    alpha_sq: f64,
    theta: f64,
    phi: f64,
    tail_bound: f64,
    out: *mut *mut StEvaluation,
) -> StStatus {
    if out.is_null() {
        return StStatus::NullPointer;
    }
    unsafe { ptr::write(out, ptr::null_mut()) };
    run_guarded(|| {
        let mut params = EvalParams::new(alpha_sq, theta, phi);
        if tail_bound > 0.0 {
            params = params.with_tail(tail_bound);
        }
        match evaluate_point(&params) {
            Ok(inner) => {
                let handle = Box::new(StEvaluation { inner });
                unsafe { ptr::write(out, Box::into_raw(handle)) };
                StStatus::Ok
            }
            Err(err) => StStatus::from(&err),
        }
    })
}

/// Release an evaluation. Null is a no-op.
///
/// # Safety
/// `handle` must be null or a pointer previously returned by
/// [`st_evaluation_new`] that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn st_evaluation_free(handle: *mut StEvaluation) {
    if !handle.is_null() {
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// Copy the flat summary of an evaluation into `out`.
///
/// # Safety
/// `handle` must be a live evaluation pointer; `out` must point to writable
/// memory for one [`StPointSummary`].
#[no_mangle]
pub unsafe extern "C" fn st_evaluation_summary(
    handle: *const StEvaluation,
    out: *mut StPointSummary,
) -> StStatus {
    if handle.is_null() || out.is_null() {
        return StStatus::NullPointer;
    }
    run_guarded(|| {
        let point = unsafe { &(*handle).inner };
        let summary = StPointSummary {
            alpha_sq: point.params.alpha_sq,
            theta: point.params.theta,
            phi: point.params.phi,
            x: point.x,
            p_i0: point.p_i0,
            concurrence: point.concurrence_sim,
            p_case_i: point.branch_probs_sim[0],
            p_nze_each: point.branch_probs_sim[1],
            p_odd_each: point.branch_probs_sim[3],
            case_i_fidelity: point.case_i_fidelity_sim,
            f_avg_sim: point.f_avg_sim,
            f_avg_closed: point.f_avg_scalar,
            f_avg_asymptotic: point.closed.asymptotic,
        };
        unsafe { ptr::write(out, summary) };
        StStatus::Ok
    })
}

/// Fetch one terminal situation's conditional probability and fidelity.
///
/// # Safety
/// `handle` must be a live evaluation pointer; `probability` and `fidelity`
/// must point to writable memory for one `double` each.
#[no_mangle]
pub unsafe extern "C" fn st_evaluation_situation(
    handle: *const StEvaluation,
    family: StFamily,
    situation: StSituation,
    probability: *mut f64,
    fidelity: *mut f64,
) -> StStatus {
    if handle.is_null() || probability.is_null() || fidelity.is_null() {
        return StStatus::NullPointer;
    }
    run_guarded(|| {
        let point = unsafe { &(*handle).inner };
        let report = point.family(match family {
            StFamily::Minus => FamilySign::Minus,
            StFamily::Plus => FamilySign::Plus,
        });
        let kind = match situation {
            StSituation::DirectSuccess => SituationKind::A,
            StSituation::PhotonCounted => SituationKind::B,
            StSituation::ReleaseLower => SituationKind::CLower,
            StSituation::ReleaseUpper => SituationKind::CUpper,
        };
        let (p, f) = report.aggregate(kind);
        unsafe {
            ptr::write(probability, p);
            ptr::write(fidelity, f);
        }
        StStatus::Ok
    })
}

/// Fetch one herald's simulated and closed-form probabilities by index
/// (0 = both silent, 1-2 = nonzero-even heralds, 3-4 = odd heralds).
///
/// # Safety
/// `handle` must be a live evaluation pointer; `simulated` and `closed_form`
/// must point to writable memory for one `double` each.
#[no_mangle]
pub unsafe extern "C" fn st_evaluation_branch(
    handle: *const StEvaluation,
    index: c_int,
    simulated: *mut f64,
    closed_form: *mut f64,
) -> StStatus {
    if handle.is_null() || simulated.is_null() || closed_form.is_null() {
        return StStatus::NullPointer;
    }
    if !(0..5).contains(&index) {
        return StStatus::InvalidInput;
    }
    run_guarded(|| {
        let point = unsafe { &(*handle).inner };
        unsafe {
            ptr::write(simulated, point.branch_probs_sim[index as usize]);
            ptr::write(closed_form, point.branch_probs_closed[index as usize]);
        }
        StStatus::Ok
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn st_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Static human-readable description of a status code.
#[no_mangle]
pub extern "C" fn st_status_message(status: StStatus) -> *const c_char {
    let text: &'static str = match status {
        StStatus::Ok => "ok\0",
        StStatus::NullPointer => "null pointer argument\0",
        StStatus::InvalidInput => "invalid input\0",
        StStatus::CutoffTooSmall => "basis cutoff cannot meet the tail bound\0",
        StStatus::CutoffLeak => "amplitude leaked past the truncated basis\0",
        StStatus::Degenerate => "state degenerated to zero norm\0",
        StStatus::InvariantViolation => "internal invariant violated\0",
        StStatus::Internal => "internal error\0",
    };
    text.as_ptr() as *const c_char
}
