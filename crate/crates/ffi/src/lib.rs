//! C ABI over `ppt-core`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`
//! functions and released with the matching `*_free`. Every function
//! returns a [`PptStatus`]; on failure a message is kept per thread and
//! read with [`ppt_last_error`]. Panics are caught at the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use ppt_core::experiment;
use ppt_core::inequalities::{self, VerificationReport};
use ppt_core::measures::{self, DiscreteMeasure};
use ppt_core::processes::{self, ConfigurationSpaceIndex, ProcessLaw};
use ppt_core::{ground, transport, Error};

/// Result codes. The first four match the exit statuses of the `ppt` binary.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PptStatus {
    Ok = 0,
    Violation = 1,
    InvalidInput = 2,
    SolverFailure = 3,
    NullPointer = 4,
    Panic = 5,
    Io = 6,
}

/// Finite measure on `{0, …, k-1}`.
pub struct PptMeasure(DiscreteMeasure);

/// Law of a point process on the enumerated configurations of `k` sites.
pub struct PptLaw(ProcessLaw);

/// Outcome of an inequality check `lhs ≤ rhs`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PptVerdict {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub violated: bool,
    pub vacuous: bool,
}

impl From<&VerificationReport> for PptVerdict {
    fn from(r: &VerificationReport) -> Self {
        Self {
            lhs: r.lhs,
            rhs: r.rhs,
            margin: r.margin,
            tolerance: r.tolerance,
            violated: r.violated,
            vacuous: r.vacuous,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> PptStatus {
    match err {
        Error::Solver { .. } => PptStatus::SolverFailure,
        Error::Io(_) => PptStatus::Io,
        _ => PptStatus::InvalidInput,
    }
}

/// Runs `f`, recording errors and catching panics.
fn guard(f: impl FnOnce() -> Result<PptStatus, (PptStatus, String)>) -> PptStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("panic inside ppt");
            PptStatus::Panic
        }
    }
}

fn core<T>(r: ppt_core::Result<T>) -> Result<T, (PptStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (PptStatus, String) {
    (PptStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (PptStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (PptStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<PptStatus, (PptStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(PptStatus::Ok)
}

/// Message of the last failure on this thread; empty if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ppt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ppt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a measure from `len` nonnegative finite weights. Weights summing
/// to one (within round-off) give a probability measure.
///
/// # Safety
/// `weights` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppt_measure_new(weights: *const f64, len: usize, out: *mut *mut PptMeasure) -> PptStatus {
    guard(|| {
        let w = slice(weights, len, "weights")?;
        let m = core(DiscreteMeasure::probability(w.to_vec()).or_else(|_| DiscreteMeasure::finite(w.to_vec())))?;
        write(out, Box::into_raw(Box::new(PptMeasure(m))), "out")
    })
}

/// # Safety
/// `m` must be null or a handle from [`ppt_measure_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ppt_measure_free(m: *mut PptMeasure) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// `H(nu | gamma)`; may be `+inf`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppt_relative_entropy(nu: *const PptMeasure, gamma: *const PptMeasure, out: *mut f64) -> PptStatus {
    guard(|| {
        let v = core(measures::relative_entropy(&deref(nu, "nu")?.0, &deref(gamma, "gamma")?.0))?;
        write(out, v, "out")
    })
}

/// Marton cost `Σ_x ν₂(x) [1 - ν₁(x)/ν₂(x)]_+²` of two probability measures.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppt_marton_cost(nu1: *const PptMeasure, nu2: *const PptMeasure, out: *mut f64) -> PptStatus {
    guard(|| {
        let v = core(transport::marton_cost(&deref(nu1, "nu1")?.0, &deref(nu2, "nu2")?.0))?;
        write(out, v, "out")
    })
}

/// `α_t(u)` for `t, u ∈ [0, 1]`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppt_alpha_t(t: f64, u: f64, out: *mut f64) -> PptStatus {
    guard(|| write(out, core(ground::alpha_t(t, u))?, "out"))
}

/// Checks the universal weak Hamming inequality with `α_t` for
/// `(gamma, nu1, nu2)`. Returns `PPT_STATUS_VIOLATION` if it fails.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppt_verify_base_dembo(
    gamma: *const PptMeasure,
    nu1: *const PptMeasure,
    nu2: *const PptMeasure,
    t: f64,
    out: *mut PptVerdict,
) -> PptStatus {
    guard(|| {
        let r = core(inequalities::verify_base_dembo(
            &deref(gamma, "gamma")?.0,
            &deref(nu1, "nu1")?.0,
            &deref(nu2, "nu2")?.0,
            t,
        ))?;
        write(out, PptVerdict::from(&r), "out")?;
        Ok(if r.violated { PptStatus::Violation } else { PptStatus::Ok })
    })
}

fn index(k: usize, cap: u32) -> Result<Arc<ConfigurationSpaceIndex>, (PptStatus, String)> {
    Ok(Arc::new(core(ConfigurationSpaceIndex::new(k, cap))?))
}

/// Truncated Poisson law with intensity `nu` on configurations of mass at
/// most `cap`.
///
/// # Safety
/// `nu` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppt_poisson_law_new(nu: *const PptMeasure, cap: u32, out: *mut *mut PptLaw) -> PptStatus {
    guard(|| {
        let nu = &deref(nu, "nu")?.0;
        let law = core(processes::poisson_law(nu, index(nu.len(), cap)?))?;
        write(out, Box::into_raw(Box::new(PptLaw(law))), "out")
    })
}

/// Binomial law `B_{μ,n}` on configurations of mass at most `cap ≥ n`.
///
/// # Safety
/// `mu` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppt_binomial_law_new(mu: *const PptMeasure, n: u32, cap: u32, out: *mut *mut PptLaw) -> PptStatus {
    guard(|| {
        let mu = &deref(mu, "mu")?.0;
        let law = core(processes::binomial_law(mu, n, index(mu.len(), cap)?))?;
        write(out, Box::into_raw(Box::new(PptLaw(law))), "out")
    })
}

/// Law with the given weights (normalized) in enumeration order: by mass,
/// then lexicographically descending counts.
///
/// # Safety
/// `weights` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppt_law_from_weights(
    k: usize,
    cap: u32,
    weights: *const f64,
    len: usize,
    out: *mut *mut PptLaw,
) -> PptStatus {
    guard(|| {
        let w = slice(weights, len, "weights")?;
        let law = core(ProcessLaw::from_weights(index(k, cap)?, w.to_vec()))?;
        write(out, Box::into_raw(Box::new(PptLaw(law))), "out")
    })
}

/// # Safety
/// `law` must be null or a live law handle.
#[no_mangle]
pub unsafe extern "C" fn ppt_law_free(law: *mut PptLaw) {
    if !law.is_null() {
        drop(Box::from_raw(law));
    }
}

/// Number of enumerated configurations.
///
/// # Safety
/// `law` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppt_law_len(law: *const PptLaw, out: *mut usize) -> PptStatus {
    guard(|| write(out, deref(law, "law")?.0.index().len(), "out"))
}

/// Copies the probabilities into `buf`, which must hold the whole law.
///
/// # Safety
/// `law` must be live; `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ppt_law_probabilities(law: *const PptLaw, buf: *mut f64, len: usize) -> PptStatus {
    guard(|| {
        let p = deref(law, "law")?.0.probabilities();
        if len < p.len() {
            return Err((PptStatus::InvalidInput, format!("buffer holds {len} values, law has {}", p.len())));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(p.as_ptr(), buf, p.len());
        Ok(PptStatus::Ok)
    })
}

/// `H(pi | reference)` between laws on the same enumeration.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppt_law_relative_entropy(pi: *const PptLaw, reference: *const PptLaw, out: *mut f64) -> PptStatus {
    guard(|| {
        let v = core(processes::law_relative_entropy(&deref(pi, "pi")?.0, &deref(reference, "reference")?.0))?;
        write(out, v, "out")
    })
}

/// Weak process inequality with `α_t` for `(pi1, pi2)` against `law`
/// (binomial or Poisson).
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ppt_verify_marton_process(
    law: *const PptLaw,
    pi1: *const PptLaw,
    pi2: *const PptLaw,
    t: f64,
    out: *mut PptVerdict,
) -> PptStatus {
    guard(|| {
        let r = core(inequalities::verify_marton_process(
            &deref(law, "law")?.0,
            &deref(pi1, "pi1")?.0,
            &deref(pi2, "pi2")?.0,
            t,
        ))?;
        write(out, PptVerdict::from(&r), "out")?;
        Ok(if r.violated { PptStatus::Violation } else { PptStatus::Ok })
    })
}

/// Runs a JSON experiment configuration and writes `report.json` and the
/// CSV tables into `out_dir`. `seed` overrides the configuration seed when
/// `override_seed` is true.
///
/// # Safety
/// `config_json` and `out_dir` must be NUL-terminated UTF-8 strings.
#[no_mangle]
pub unsafe extern "C" fn ppt_run_config(
    config_json: *const c_char,
    out_dir: *const c_char,
    override_seed: bool,
    seed: u64,
) -> PptStatus {
    guard(|| {
        let text = utf8(config_json, "config_json")?;
        let dir = utf8(out_dir, "out_dir")?;
        let mut cfg = core(experiment::parse_config(text))?;
        if override_seed {
            cfg.seed = seed;
        }
        let outcome = experiment::run_batch(&cfg, &experiment::config_hash(text));
        core(experiment::write_outputs(Path::new(dir), &outcome))?;
        Ok(match outcome.status {
            experiment::STATUS_OK => PptStatus::Ok,
            experiment::STATUS_VIOLATION => PptStatus::Violation,
            experiment::STATUS_SCHEMA => PptStatus::InvalidInput,
            _ => PptStatus::SolverFailure,
        })
    })
}

unsafe fn utf8<'a>(p: *const c_char, what: &str) -> Result<&'a str, (PptStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (PptStatus::InvalidInput, format!("{what} is not valid UTF-8")))
}
