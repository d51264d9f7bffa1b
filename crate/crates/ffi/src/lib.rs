//! C ABI over the corrwit core.
//!
//! States and POVMs live behind opaque handles that the caller frees. Every
//! fallible call returns a [`CorrwitStatus`]; on failure the message is kept
//! in a thread-local slot readable through [`corrwit_last_error_message`].
//! Complex matrices cross the boundary as two row-major `double` arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use corrwit::detect::classify;
use corrwit::linalg::{BipartiteDims, HermitianOperator, C64};
use corrwit::povm::{analyze, build_minimal_cq_povm, statistics, Povm};
use corrwit::states::{random_direction, DensityMatrix, Seed};
use corrwit::witness::{
    build_entangling_perturbation, build_non_cq_or_qc_perturbation_with_tol, build_noncc_perturbation_with_tol,
    build_noncq_perturbation_with_tol,
};
use corrwit::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorrwitStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Input matrix failed validation (shape, Hermiticity, positivity, trace).
    InvalidInput = 3,
    /// A construction failed for mathematical reasons.
    ConstructionFailed = 4,
    /// A panic was caught at the boundary.
    Internal = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorrwitCrossing {
    NonCq = 0,
    NonCc = 1,
    NonCqOrQc = 2,
}

/// Opaque bipartite density matrix.
pub struct CorrwitState(DensityMatrix);

/// Opaque POVM.
pub struct CorrwitPovm(Povm);

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct CorrwitClassReport {
    pub npt: bool,
    pub cq: bool,
    pub qc: bool,
    pub cc: bool,
    pub min_pt_eig: f64,
    pub max_commutator_a: f64,
    pub max_commutator_b: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct CorrwitPovmAnalysis {
    pub dim_e: usize,
    pub dim_xe: usize,
    pub informationally_complete: bool,
    pub decides_cq: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct CorrwitWitnessSummary {
    pub lambda: f64,
    /// Smallest eigenvalue of the partial transpose of the perturbed state.
    pub min_pt_eig: f64,
    /// Whether the perturbed state left the class its base belonged to.
    pub crossed: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CorrwitStatus {
    match e.exit_code() {
        1 => CorrwitStatus::ConstructionFailed,
        _ => match e {
            Error::InvalidArgument(_) | Error::LocalDimension { .. } => CorrwitStatus::InvalidArgument,
            _ => CorrwitStatus::InvalidInput,
        },
    }
}

fn guard(f: impl FnOnce() -> Result<(), (CorrwitStatus, String)>) -> CorrwitStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            CorrwitStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal error: {msg}"));
            CorrwitStatus::Internal
        }
    }
}

fn core<T>(r: corrwit::Result<T>) -> Result<T, (CorrwitStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (CorrwitStatus, String) {
    (CorrwitStatus::NullPointer, format!("{what} is null"))
}

fn dims(d: usize) -> Result<BipartiteDims, (CorrwitStatus, String)> {
    core(BipartiteDims::new(d))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the length of the full message without the
/// terminator, or 0 when there is no error.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn corrwit_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let slot = slot.borrow();
        let Some(msg) = slot.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Builds a state on C^d ⊗ C^d from row-major real and imaginary parts of
/// length `d^4`.
///
/// # Safety
/// `re` and `im` must be valid for `d^4` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn corrwit_state_new(
    d: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut CorrwitState,
) -> CorrwitStatus {
    guard(|| {
        if re.is_null() || im.is_null() {
            return Err(null("entry array"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let dims = dims(d)?;
        let n = dims.total() * dims.total();
        let re = std::slice::from_raw_parts(re, n);
        let im = std::slice::from_raw_parts(im, n);
        let entries: Vec<C64> = re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect();
        let op = core(HermitianOperator::from_row_major(&entries))?;
        let rho = core(DensityMatrix::bipartite(op, dims))?;
        *out = Box::into_raw(Box::new(CorrwitState(rho)));
        Ok(())
    })
}

/// The maximally mixed state I/d².
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn corrwit_state_maximally_mixed(d: usize, out: *mut *mut CorrwitState) -> CorrwitStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = Box::into_raw(Box::new(CorrwitState(DensityMatrix::maximally_mixed(dims(d)?))));
        Ok(())
    })
}

/// # Safety
/// `state` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn corrwit_state_free(state: *mut CorrwitState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// # Safety
/// `state` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn corrwit_state_classify(
    state: *const CorrwitState,
    tol: f64,
    out: *mut CorrwitClassReport,
) -> CorrwitStatus {
    guard(|| {
        let state = state.as_ref().ok_or_else(|| null("state"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if !(tol > 0.0 && tol.is_finite()) {
            return Err((CorrwitStatus::InvalidArgument, format!("tolerance must be positive, got {tol}")));
        }
        let r = core(classify(&state.0, tol))?;
        *out = CorrwitClassReport {
            npt: r.npt,
            cq: r.cq,
            qc: r.qc,
            cc: r.cc,
            min_pt_eig: r.min_pt_eig,
            max_commutator_a: r.max_commutator_a,
            max_commutator_b: r.max_commutator_b,
        };
        Ok(())
    })
}

/// Minimal POVM that decides CQ membership (d⁴ − d² + 1 outcomes).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn corrwit_povm_minimal_cq(d: usize, epsilon: f64, out: *mut *mut CorrwitPovm) -> CorrwitStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let povm = core(build_minimal_cq_povm(dims(d)?, epsilon))?;
        *out = Box::into_raw(Box::new(CorrwitPovm(povm)));
        Ok(())
    })
}

/// # Safety
/// `povm` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn corrwit_povm_free(povm: *mut CorrwitPovm) {
    if !povm.is_null() {
        drop(Box::from_raw(povm));
    }
}

/// Number of outcomes, or 0 for a null handle.
///
/// # Safety
/// `povm` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn corrwit_povm_len(povm: *const CorrwitPovm) -> usize {
    povm.as_ref().map_or(0, |p| p.0.len())
}

/// # Safety
/// `povm` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn corrwit_povm_analyze(povm: *const CorrwitPovm, out: *mut CorrwitPovmAnalysis) -> CorrwitStatus {
    guard(|| {
        let povm = povm.as_ref().ok_or_else(|| null("povm"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let a = core(analyze(&povm.0))?;
        *out = CorrwitPovmAnalysis {
            dim_e: a.dim_e,
            dim_xe: a.dim_xe,
            informationally_complete: a.informationally_complete,
            decides_cq: a.decides_cq,
        };
        Ok(())
    })
}

/// Outcome probabilities tr(E_j ρ), written to `probs` of length `len`,
/// which must equal the number of outcomes.
///
/// # Safety
/// Handles must be live and `probs` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn corrwit_povm_statistics(
    povm: *const CorrwitPovm,
    state: *const CorrwitState,
    probs: *mut f64,
    len: usize,
) -> CorrwitStatus {
    guard(|| {
        let povm = povm.as_ref().ok_or_else(|| null("povm"))?;
        let state = state.as_ref().ok_or_else(|| null("state"))?;
        if probs.is_null() {
            return Err(null("probs"));
        }
        if len != povm.0.len() {
            return Err((CorrwitStatus::InvalidArgument, format!("buffer holds {len} values, POVM has {}", povm.0.len())));
        }
        let p = core(statistics(&povm.0, &state.0))?;
        std::slice::from_raw_parts_mut(probs, len).copy_from_slice(&p);
        Ok(())
    })
}

/// Entangling perturbation along the seeded random direction. On success the
/// perturbed state is written to `out_state` (if non-null).
///
/// # Safety
/// `out` must be writable; `out_state` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn corrwit_witness_entangle(
    d: usize,
    seed: u64,
    out: *mut CorrwitWitnessSummary,
    out_state: *mut *mut CorrwitState,
) -> CorrwitStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let delta = random_direction(dims(d)?, Seed(seed));
        let cert = core(build_entangling_perturbation(&delta))?;
        core(cert.verify())?;
        *out = CorrwitWitnessSummary { lambda: cert.lambda, min_pt_eig: cert.min_pt_eig, crossed: true };
        if !out_state.is_null() {
            *out_state = Box::into_raw(Box::new(CorrwitState(cert.kappa)));
        }
        Ok(())
    })
}

/// Class-crossing perturbation along the seeded random direction.
///
/// # Safety
/// `out` must be writable; `out_state` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn corrwit_witness_crossing(
    kind: CorrwitCrossing,
    d: usize,
    seed: u64,
    tol: f64,
    out: *mut CorrwitWitnessSummary,
    out_state: *mut *mut CorrwitState,
) -> CorrwitStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if !(tol > 0.0 && tol.is_finite()) {
            return Err((CorrwitStatus::InvalidArgument, format!("tolerance must be positive, got {tol}")));
        }
        let delta = random_direction(dims(d)?, Seed(seed));
        let cert = core(match kind {
            CorrwitCrossing::NonCq => build_noncq_perturbation_with_tol(&delta, tol),
            CorrwitCrossing::NonCc => build_noncc_perturbation_with_tol(&delta, tol),
            CorrwitCrossing::NonCqOrQc => build_non_cq_or_qc_perturbation_with_tol(&delta, tol),
        })?;
        let report = core(classify(&cert.kappa, tol))?;
        *out = CorrwitWitnessSummary { lambda: cert.lambda, min_pt_eig: report.min_pt_eig, crossed: cert.holds() };
        if !out_state.is_null() {
            *out_state = Box::into_raw(Box::new(CorrwitState(cert.kappa)));
        }
        Ok(())
    })
}
