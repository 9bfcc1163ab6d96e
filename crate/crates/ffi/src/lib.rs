//! C ABI for `twophase`.
//!
//! Every function returns a [`TpStatus`]. On failure a description is kept in
//! thread-local storage and can be copied out with
//! [`tp_last_error_message`]. Matrices are 2×2 row-major `double[4]` in the
//! `(φ_s, φ_d)` basis. Handles are created by `*_new` / `tp_sample` and must be
//! released with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use nalgebra::{Matrix2, Vector2};
use twophase::estimation::{estimate_closed_form, mle_numeric, sample_stream, MleOptions};
use twophase::fisher::{crb, crb_pseudo, fim_exact, fim_total_asymptotic, FisherKind};
use twophase::homodyne::{output_distribution, resolve_lo};
use twophase::{Error, FisherMatrix, LoSetting, PhasePair, Probe, SampleBatch};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    NotUnitary = 4,
    Uncertainty = 5,
    NotPositiveDefinite = 6,
    IndeterminatePhase = 7,
    SingularFisher = 8,
    NotIdentifiable = 9,
    Estimator = 10,
    Config = 11,
    Io = 12,
    Numerical = 13,
    Panic = 14,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TpLoMode {
    /// `param1 = k₁`, `param2 = k₂`.
    Tuned = 0,
    /// `param1 = θ₁`, `param2 = θ₂`.
    Explicit = 1,
    /// `param1 = δ₁`, `param2 = δ₂`.
    Offset = 2,
}

/// Probe and local-oscillator configuration.
pub struct TpModel {
    probe: Probe,
    lo: LoSetting,
}

/// Joint homodyne outcomes.
pub struct TpSampleBatch {
    batch: SampleBatch,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> TpStatus {
    match err {
        Error::Dimension { .. } => TpStatus::Dimension,
        Error::NotUnitary { .. } => TpStatus::NotUnitary,
        Error::Uncertainty { .. } => TpStatus::Uncertainty,
        Error::NotPositiveDefinite { .. } => TpStatus::NotPositiveDefinite,
        Error::IndeterminatePhase { .. } => TpStatus::IndeterminatePhase,
        Error::SingularFisher { .. } => TpStatus::SingularFisher,
        Error::NotIdentifiable => TpStatus::NotIdentifiable,
        Error::Estimator(_) => TpStatus::Estimator,
        Error::Config(_) => TpStatus::Config,
        Error::Io { .. } => TpStatus::Io,
        Error::Numerical(_) => TpStatus::Numerical,
    }
}

enum Fail {
    Null(&'static str),
    Invalid(String),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            TpStatus::Ok
        }
        Ok(Err(Fail::Null(name))) => {
            set_error(format!("null pointer passed for `{name}`"));
            TpStatus::NullPointer
        }
        Ok(Err(Fail::Invalid(msg))) => {
            set_error(msg);
            TpStatus::InvalidArgument
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            TpStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Fail> {
    unsafe { p.as_ref() }.ok_or(Fail::Null(name))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, name: &'static str) -> Result<&'a mut [f64], Fail> {
    if p.is_null() {
        return Err(Fail::Null(name));
    }
    Ok(unsafe { std::slice::from_raw_parts_mut(p, len) })
}

unsafe fn in_matrix(p: *const f64, name: &'static str) -> Result<Matrix2<f64>, Fail> {
    if p.is_null() {
        return Err(Fail::Null(name));
    }
    let s = unsafe { std::slice::from_raw_parts(p, 4) };
    Ok(Matrix2::new(s[0], s[1], s[2], s[3]))
}

fn write_matrix(dst: &mut [f64], m: &Matrix2<f64>) {
    dst.copy_from_slice(&[m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]);
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn tp_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// Creates a model for a probe `|α₁, r⟩ ⊗ |α₂⟩` and an LO setting.
///
/// # Safety
/// `out` must be a valid pointer; the handle written there must be released
/// with [`tp_model_free`].
#[no_mangle]
pub unsafe extern "C" fn tp_model_new(
    alpha1: f64,
    alpha2: f64,
    r: f64,
    lo_mode: TpLoMode,
    param1: f64,
    param2: f64,
    out: *mut *mut TpModel,
) -> TpStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        if ![alpha1, alpha2, r, param1, param2].iter().all(|v| v.is_finite()) || r < 0.0 {
            return Err(Fail::Invalid("parameters must be finite and r non-negative".into()));
        }
        let lo = match lo_mode {
            TpLoMode::Tuned => LoSetting::Tuned { k1: param1, k2: param2 },
            TpLoMode::Explicit => LoSetting::Explicit {
                theta1: param1,
                theta2: param2,
            },
            TpLoMode::Offset => LoSetting::Offset {
                offset1: param1,
                offset2: param2,
            },
        };
        let model = Box::new(TpModel {
            probe: Probe::new(alpha1, alpha2, r),
            lo,
        });
        unsafe { *out = Box::into_raw(model) };
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from [`tp_model_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tp_model_free(model: *mut TpModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// LO angles `θ[2]` the model uses at the given phases.
///
/// # Safety
/// `model` must be a live handle and `theta` point to 2 doubles.
#[no_mangle]
pub unsafe extern "C" fn tp_resolve_lo(model: *const TpModel, phi_s: f64, phi_d: f64, theta: *mut f64) -> TpStatus {
    guard(|| {
        let m = unsafe { deref(model, "model")? };
        let out = unsafe { out_slice(theta, 2, "theta")? };
        let (t1, t2) = resolve_lo(&m.lo, PhasePair::new(phi_s, phi_d), &m.probe)?;
        out.copy_from_slice(&[t1, t2]);
        Ok(())
    })
}

/// Mean `mu[2]` and covariance `sigma[4]` of the homodyne outcomes.
///
/// # Safety
/// `model` must be a live handle; `mu` and `sigma` must point to 2 and 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn tp_output_distribution(
    model: *const TpModel,
    phi_s: f64,
    phi_d: f64,
    mu: *mut f64,
    sigma: *mut f64,
) -> TpStatus {
    guard(|| {
        let m = unsafe { deref(model, "model")? };
        let mu = unsafe { out_slice(mu, 2, "mu")? };
        let sigma = unsafe { out_slice(sigma, 4, "sigma")? };
        let phases = PhasePair::new(phi_s, phi_d);
        let (t1, t2) = resolve_lo(&m.lo, phases, &m.probe)?;
        let d = output_distribution(phases, &m.probe, t1, t2)?;
        mu.copy_from_slice(d.mu.as_slice());
        write_matrix(sigma, &d.sigma);
        Ok(())
    })
}

/// Exact Fisher information. Any of `signal`, `noise`, `total` may be null.
///
/// # Safety
/// `model` must be a live handle; non-null outputs must point to 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn tp_fim_exact(
    model: *const TpModel,
    phi_s: f64,
    phi_d: f64,
    signal: *mut f64,
    noise: *mut f64,
    total: *mut f64,
) -> TpStatus {
    guard(|| {
        let m = unsafe { deref(model, "model")? };
        let f = fim_exact(PhasePair::new(phi_s, phi_d), &m.probe, &m.lo)?;
        for (ptr, mat) in [(signal, &f.signal), (noise, &f.noise), (total, &f.total)] {
            if !ptr.is_null() {
                write_matrix(unsafe { std::slice::from_raw_parts_mut(ptr, 4) }, &mat.matrix);
            }
        }
        Ok(())
    })
}

/// Total asymptotic information for tuned detectors with common `k`.
///
/// # Safety
/// `out` must point to 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn tp_fim_total_asymptotic(beta: f64, ns: f64, nc: f64, k: f64, out: *mut f64) -> TpStatus {
    guard(|| {
        let out = unsafe { out_slice(out, 4, "out")? };
        if !(0.0..=1.0).contains(&beta) {
            return Err(Fail::Invalid(format!("beta = {beta} outside [0, 1]")));
        }
        write_matrix(out, &fim_total_asymptotic(beta, ns, nc, k).matrix);
        Ok(())
    })
}

/// Cramér–Rao variances `var[2] = diag(F⁻¹)/ν`.
///
/// # Safety
/// `fim` must point to 4 doubles and `var` to 2.
#[no_mangle]
pub unsafe extern "C" fn tp_crb(fim: *const f64, nu: u64, var: *mut f64) -> TpStatus {
    guard(|| {
        let f = FisherMatrix::new(unsafe { in_matrix(fim, "fim")? }, FisherKind::Exact);
        let out = unsafe { out_slice(var, 2, "var")? };
        if nu == 0 {
            return Err(Fail::Invalid("nu must be positive".into()));
        }
        let r = crb(&f, nu)?;
        out.copy_from_slice(&[r.var_phi_s, r.var_phi_d]);
        Ok(())
    })
}

/// Pseudo-inverse bound `w F⁺ wᵀ / ν` on `w·φ`.
///
/// # Safety
/// `fim` must point to 4 doubles, `weights` to 2 and `var` to 1.
#[no_mangle]
pub unsafe extern "C" fn tp_crb_pseudo(fim: *const f64, weights: *const f64, nu: u64, var: *mut f64) -> TpStatus {
    guard(|| {
        let f = FisherMatrix::new(unsafe { in_matrix(fim, "fim")? }, FisherKind::Exact);
        if weights.is_null() {
            return Err(Fail::Null("weights"));
        }
        let out = unsafe { out_slice(var, 1, "var")? };
        if nu == 0 {
            return Err(Fail::Invalid("nu must be positive".into()));
        }
        let w = unsafe { std::slice::from_raw_parts(weights, 2) };
        out[0] = crb_pseudo(&f, [w[0], w[1]], nu)?;
        Ok(())
    })
}

/// Draws `nu` outcomes at the given phases on RNG stream `stream` of `seed`.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer; release the batch
/// with [`tp_batch_free`].
#[no_mangle]
pub unsafe extern "C" fn tp_sample(
    model: *const TpModel,
    phi_s: f64,
    phi_d: f64,
    nu: usize,
    seed: u64,
    stream: u64,
    out: *mut *mut TpSampleBatch,
) -> TpStatus {
    guard(|| {
        let m = unsafe { deref(model, "model")? };
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let phases = PhasePair::new(phi_s, phi_d);
        let (t1, t2) = resolve_lo(&m.lo, phases, &m.probe)?;
        let dist = output_distribution(phases, &m.probe, t1, t2)?;
        let batch = sample_stream(&dist, nu, seed, stream, 0)?;
        unsafe { *out = Box::into_raw(Box::new(TpSampleBatch { batch })) };
        Ok(())
    })
}

/// # Safety
/// `batch` must be null or a handle from [`tp_sample`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tp_batch_free(batch: *mut TpSampleBatch) {
    if !batch.is_null() {
        drop(unsafe { Box::from_raw(batch) });
    }
}

/// Number of outcomes in the batch, 0 for null.
///
/// # Safety
/// `batch` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tp_batch_len(batch: *const TpSampleBatch) -> usize {
    unsafe { batch.as_ref() }.map_or(0, |b| b.batch.len())
}

/// Copies outcomes as interleaved `x₁, x₂` pairs into `out` (`2·len` doubles).
///
/// # Safety
/// `batch` must be a live handle and `out` point to `2·capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn tp_batch_outcomes(batch: *const TpSampleBatch, out: *mut f64, capacity: usize) -> TpStatus {
    guard(|| {
        let b = unsafe { deref(batch, "batch")? };
        if capacity < b.batch.len() {
            return Err(Fail::Invalid(format!(
                "capacity {capacity} smaller than batch length {}",
                b.batch.len()
            )));
        }
        let dst = unsafe { out_slice(out, 2 * b.batch.len(), "out")? };
        for (chunk, x) in dst.chunks_exact_mut(2).zip(&b.batch.outcomes) {
            chunk.copy_from_slice(x.as_slice());
        }
        Ok(())
    })
}

/// Closed-form estimates `phases[2] = (φ̃_s, φ̃_d)` for a batch drawn with
/// `α₁ = 0` and equal tuning. `(ref_s, ref_d)` selects the branch and should
/// be the operating point the oscillators are locked to.
///
/// # Safety
/// `model` and `batch` must be live handles and `phases` point to 2 doubles.
#[no_mangle]
pub unsafe extern "C" fn tp_estimate_closed_form(
    model: *const TpModel,
    batch: *const TpSampleBatch,
    ref_s: f64,
    ref_d: f64,
    phases: *mut f64,
) -> TpStatus {
    guard(|| {
        let m = unsafe { deref(model, "model")? };
        let b = unsafe { deref(batch, "batch")? };
        let out = unsafe { out_slice(phases, 2, "phases")? };
        let reference = PhasePair::new(ref_s, ref_d);
        let (t1, _) = resolve_lo(&m.lo, reference, &m.probe)?;
        let rec = estimate_closed_form(&b.batch, m.probe.r, t1, reference)?;
        out.copy_from_slice(&[rec.phi_s_hat, rec.phi_d_hat]);
        Ok(())
    })
}

/// Numeric maximum-likelihood estimate from `(init_s, init_d)`, with the LO
/// angles resolved at the initial point. `converged` may be null.
///
/// # Safety
/// `model` and `batch` must be live handles and `phases` point to 2 doubles.
#[no_mangle]
pub unsafe extern "C" fn tp_estimate_numeric(
    model: *const TpModel,
    batch: *const TpSampleBatch,
    init_s: f64,
    init_d: f64,
    phases: *mut f64,
    converged: *mut bool,
) -> TpStatus {
    guard(|| {
        let m = unsafe { deref(model, "model")? };
        let b = unsafe { deref(batch, "batch")? };
        let out = unsafe { out_slice(phases, 2, "phases")? };
        let init = PhasePair::new(init_s, init_d);
        let theta = resolve_lo(&m.lo, init, &m.probe)?;
        let rec = mle_numeric(&b.batch, &m.probe, theta, init, &MleOptions::default());
        out.copy_from_slice(&[rec.phi_s_hat, rec.phi_d_hat]);
        if !converged.is_null() {
            unsafe { *converged = rec.converged };
        }
        Ok(())
    })
}

/// Human-readable name of a status code.
#[no_mangle]
pub extern "C" fn tp_status_name(status: TpStatus) -> *const c_char {
    let s: &'static CStr = match status {
        TpStatus::Ok => c"ok",
        TpStatus::NullPointer => c"null pointer",
        TpStatus::InvalidArgument => c"invalid argument",
        TpStatus::Dimension => c"dimension mismatch",
        TpStatus::NotUnitary => c"not unitary",
        TpStatus::Uncertainty => c"uncertainty relation violated",
        TpStatus::NotPositiveDefinite => c"not positive definite",
        TpStatus::IndeterminatePhase => c"indeterminate phase",
        TpStatus::SingularFisher => c"singular Fisher matrix",
        TpStatus::NotIdentifiable => c"not identifiable",
        TpStatus::Estimator => c"estimator failure",
        TpStatus::Config => c"configuration error",
        TpStatus::Io => c"I/O error",
        TpStatus::Numerical => c"numerical failure",
        TpStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

// Keeps the header's mean/outcome layout in sync with nalgebra's storage.
const _: () = assert!(std::mem::size_of::<Vector2<f64>>() == 2 * std::mem::size_of::<f64>());
