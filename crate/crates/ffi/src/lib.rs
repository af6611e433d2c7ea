//! C ABI over `cimcs`.
//!
//! Objects live behind opaque handles created by `*_new`/`*_generate`/
//! `*_load` functions and released by the matching `*_free`. Every fallible
//! call returns a [`CimStatus`]; on failure the message is kept per thread
//! and read with [`cim_last_error`]. Output pointers are written only on
//! success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use cimcs::altmin::{run_alt_min, AltMinConfig, RunTrace};
use cimcs::qubo::build_qubo;
use cimcs::sde::{cim_support_estimation, Model, SdeParams};
use cimcs::{instance, CimError, Instance, InstanceParams, QuboProblem, Support};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Numerical = 4,
    Io = 5,
    Format = 6,
    Config = 7,
    RunFailed = 8,
    Panic = 9,
}

/// Machine model selector.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CimModel {
    WignerOl = 0,
    WignerCac = 1,
    PositiveP = 2,
}

impl From<CimModel> for Model {
    fn from(m: CimModel) -> Self {
        match m {
            CimModel::WignerOl => Model::WignerOl,
            CimModel::WignerCac => Model::WignerCac,
            CimModel::PositiveP => Model::PositiveP,
        }
    }
}

/// A compressed-sensing instance.
pub struct CimInstance(Instance);

/// A QUBO built from an instance at a fixed threshold.
pub struct CimQubo(QuboProblem);

/// Outcome of an alternating-minimisation run.
pub struct CimRun(RunTrace);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &CimError) -> CimStatus {
    match e {
        CimError::InvalidParameter { .. } | CimError::TooLarge(_) | CimError::ZeroColumn(_) => CimStatus::InvalidArgument,
        CimError::DimensionMismatch { .. } => CimStatus::DimensionMismatch,
        CimError::NonFinite(_) | CimError::Integration { .. } => CimStatus::Numerical,
        CimError::Iteration { source, .. } => status_of(source),
        CimError::Format(_) => CimStatus::Format,
        CimError::Config(_) => CimStatus::Config,
        CimError::RunsFailed { .. } => CimStatus::RunFailed,
        CimError::Io(_) => CimStatus::Io,
    }
}

/// Runs `f`, converting errors and panics into a status plus message.
fn guard(f: impl FnOnce() -> Result<(), (CimStatus, String)>) -> CimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CimStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CimStatus::Panic
        }
    }
}

type FfiResult<T> = Result<T, (CimStatus, String)>;

fn lift<T>(r: cimcs::Result<T>) -> FfiResult<T> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (CimStatus, String) {
    (CimStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> FfiResult<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> FfiResult<&'a mut [T]> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn path<'a>(p: *const c_char) -> FfiResult<&'a Path> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| (CimStatus::InvalidArgument, "path is not valid UTF-8".into()))
}

fn check_len(what: &str, expected: usize, got: usize) -> FfiResult<()> {
    if expected == got {
        Ok(())
    } else {
        Err((CimStatus::DimensionMismatch, format!("{what}: expected length {expected}, got {got}")))
    }
}

/// Message of the last failed call on this thread, or null after a
/// success. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn cim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Generates a seeded synthetic instance.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn cim_instance_generate(
    n: usize,
    alpha: f64,
    sparseness: f64,
    nu: f64,
    seed: u64,
    out: *mut *mut CimInstance,
) -> CimStatus {
    guard(|| {
        let slot = out_ptr(out, "out")?;
        let inst = lift(cimcs::gen_instance(InstanceParams { n, alpha, sparseness, nu, seed }))?;
        *slot = Box::into_raw(Box::new(CimInstance(inst)));
        Ok(())
    })
}

/// Loads an instance file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cim_instance_load(path_: *const c_char, out: *mut *mut CimInstance) -> CimStatus {
    guard(|| {
        let slot = out_ptr(out, "out")?;
        let inst = lift(instance::load(path(path_)?))?;
        *slot = Box::into_raw(Box::new(CimInstance(inst)));
        Ok(())
    })
}

/// Writes an instance file.
///
/// # Safety
/// `inst` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn cim_instance_save(inst: *const CimInstance, path_: *const c_char) -> CimStatus {
    guard(|| {
        let inst = deref(inst, "instance")?;
        lift(instance::save(&inst.0, path(path_)?))
    })
}

/// Number of unknowns N and measurements M.
///
/// # Safety
/// `inst` must come from this library; `n` and `m` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cim_instance_dims(inst: *const CimInstance, n: *mut usize, m: *mut usize) -> CimStatus {
    guard(|| {
        let inst = deref(inst, "instance")?;
        let (n, m) = (out_ptr(n, "n")?, out_ptr(m, "m")?);
        *n = inst.0.n();
        *m = inst.0.m();
        Ok(())
    })
}

/// Copies the true source `x ∘ ξ` (length N) into `buf`.
///
/// # Safety
/// `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cim_instance_source(inst: *const CimInstance, buf: *mut f64, len: usize) -> CimStatus {
    guard(|| {
        let inst = deref(inst, "instance")?;
        let buf = slice_mut(buf, len, "buf")?;
        check_len("source", inst.0.n(), len)?;
        buf.copy_from_slice(&inst.0.masked_signal());
        Ok(())
    })
}

/// Copies the true support (length N, 0 or 1) into `buf`.
///
/// # Safety
/// `buf` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn cim_instance_support(inst: *const CimInstance, buf: *mut u8, len: usize) -> CimStatus {
    guard(|| {
        let inst = deref(inst, "instance")?;
        let buf = slice_mut(buf, len, "buf")?;
        check_len("support", inst.0.n(), len)?;
        for (b, on) in buf.iter_mut().zip(inst.0.support.iter()) {
            *b = on as u8;
        }
        Ok(())
    })
}

/// Copies the observation matrix, row-major M×N, into `buf`.
///
/// # Safety
/// `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cim_instance_matrix(inst: *const CimInstance, buf: *mut f64, len: usize) -> CimStatus {
    guard(|| {
        let inst = deref(inst, "instance")?;
        let buf = slice_mut(buf, len, "buf")?;
        check_len("matrix", inst.0.n() * inst.0.m(), len)?;
        for (b, v) in buf.iter_mut().zip(inst.0.matrix.iter()) {
            *b = *v;
        }
        Ok(())
    })
}

/// Releases an instance; null is ignored.
///
/// # Safety
/// `inst` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cim_instance_free(inst: *mut CimInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Builds the QUBO of `inst` at threshold `eta` (`λ = η²/2`).
///
/// # Safety
/// `inst` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cim_qubo_build(inst: *const CimInstance, eta: f64, out: *mut *mut CimQubo) -> CimStatus {
    guard(|| {
        let inst = deref(inst, "instance")?;
        let slot = out_ptr(out, "out")?;
        let q = lift(build_qubo(&inst.0.matrix, &inst.0.observation, eta))?;
        *slot = Box::into_raw(Box::new(CimQubo(q)));
        Ok(())
    })
}

/// Energy and objective of support `sigma` (bytes, nonzero = on) at
/// signal `signal`, both of length N.
///
/// # Safety
/// Buffers must hold `n` elements; `energy` and `objective` may be null.
#[no_mangle]
pub unsafe extern "C" fn cim_qubo_energy(
    q: *const CimQubo,
    signal: *const f64,
    sigma: *const u8,
    n: usize,
    energy: *mut f64,
    objective: *mut f64,
) -> CimStatus {
    guard(|| {
        let q = deref(q, "qubo")?;
        let signal = slice(signal, n, "signal")?;
        let sigma = Support::from_bits(slice(sigma, n, "sigma")?.iter().map(|&b| b != 0).collect());
        let rep = lift(q.0.energy(signal, &sigma))?;
        if let Some(e) = energy.as_mut() {
            *e = rep.energy;
        }
        if let Some(o) = objective.as_mut() {
            *o = rep.objective();
        }
        Ok(())
    })
}

/// Releases a QUBO; null is ignored.
///
/// # Safety
/// `q` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cim_qubo_free(q: *mut CimQubo) {
    if !q.is_null() {
        drop(Box::from_raw(q));
    }
}

/// One machine trajectory at fixed signal with the model's default
/// integrator settings; writes the binarised support into `sigma_out`.
///
/// # Safety
/// `signal` and `sigma_out` must hold `n` elements.
#[no_mangle]
pub unsafe extern "C" fn cim_support_estimate(
    q: *const CimQubo,
    model: CimModel,
    signal: *const f64,
    n: usize,
    eta: f64,
    seed: u64,
    sigma_out: *mut u8,
) -> CimStatus {
    guard(|| {
        let q = deref(q, "qubo")?;
        let signal = slice(signal, n, "signal")?;
        let out = slice_mut(sigma_out, n, "sigma_out")?;
        check_len("signal", q.0.n(), n)?;
        let model = Model::from(model);
        let params = SdeParams::default_for(model).with_seed(seed);
        let est = lift(cim_support_estimation(model, &q.0, signal, eta, &params, None))?;
        for (b, on) in out.iter_mut().zip(est.sigma.iter()) {
            *b = on as u8;
        }
        Ok(())
    })
}

/// Alternating minimisation with the synthetic defaults (52 iterations,
/// η from `eta_init` to `eta_end`).
///
/// # Safety
/// `inst` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cim_altmin_run(
    inst: *const CimInstance,
    model: CimModel,
    eta_init: f64,
    eta_end: f64,
    seed: u64,
    out: *mut *mut CimRun,
) -> CimStatus {
    guard(|| {
        let inst = deref(inst, "instance")?;
        let slot = out_ptr(out, "out")?;
        let mut cfg = AltMinConfig::synthetic(model.into(), eta_init, eta_end);
        cfg.seed = seed;
        let tr = lift(run_alt_min(&inst.0, &cfg))?;
        *slot = Box::into_raw(Box::new(CimRun(tr)));
        Ok(())
    })
}

/// Number of iterations recorded.
///
/// # Safety
/// `run` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn cim_run_iterations(run: *const CimRun) -> usize {
    run.as_ref().map_or(0, |r| r.0.records.len())
}

/// Final RMSE, direction cosine and Hamming loss; any output may be null.
///
/// # Safety
/// `run` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn cim_run_metrics(
    run: *const CimRun,
    rmse: *mut f64,
    direction_cosine: *mut f64,
    hamming_loss: *mut f64,
) -> CimStatus {
    guard(|| {
        let run = deref(run, "run")?;
        let m = run
            .0
            .last()
            .metrics
            .ok_or_else(|| (CimStatus::InvalidArgument, "run has no ground truth".to_string()))?;
        for (p, v) in [(rmse, m.rmse), (direction_cosine, m.direction_cosine), (hamming_loss, m.hamming_loss)] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Copies the final estimate `R ∘ σ` (length N) into `buf`.
///
/// # Safety
/// `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cim_run_estimate(run: *const CimRun, buf: *mut f64, len: usize) -> CimStatus {
    guard(|| {
        let run = deref(run, "run")?;
        let buf = slice_mut(buf, len, "buf")?;
        check_len("estimate", run.0.signal.len(), len)?;
        for (r, b) in buf.iter_mut().enumerate() {
            *b = run.0.signal[r] * run.0.sigma.value(r);
        }
        Ok(())
    })
}

/// Releases a run; null is ignored.
///
/// # Safety
/// `run` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cim_run_free(run: *mut CimRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}
