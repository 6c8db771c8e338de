//! C ABI over the `sscn` optimizer.
//!
//! Handles are opaque pointers owned by the caller and released with the
//! matching `_free` function. Every fallible call returns an [`SscnStatus`];
//! on failure the message is available from [`sscn_last_error_message`] on the
//! same thread until the next failing call. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::DMatrix;
use sscn::data_io::{load_libsvm, parse_libsvm_str, SparseDataset};
use sscn::model::{CubicModel, CurvatureSource};
use sscn::objectives::{Objective, Quadratic, RegularizedLogistic};
use sscn::optimizer::{run, MPolicy, OptimizerConfig, RunTrace, StopCriteria, Termination};
use sscn::subproblem::solve_global;
use sscn::subset::SamplingSchedule;
use sscn::SscnError;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SscnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    Numerical = 5,
    Diverged = 6,
    Panic = 7,
}

/// Curvature choice for [`SscnRunOptions`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SscnCurvature {
    Exact = 0,
    Zero = 1,
    FiniteDifference = 2,
}

/// Why a run stopped.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SscnTermination {
    GradTol = 0,
    MaxIters = 1,
    MaxTime = 2,
}

/// Options for [`sscn_run`]. Start from [`sscn_run_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SscnRunOptions {
    /// Coordinates per iteration; 0 means all of them.
    pub tau: usize,
    /// Fixed regularization when positive; otherwise adaptive doubling from `m0`.
    pub fixed_m: f64,
    pub m0: f64,
    pub curvature: SscnCurvature,
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Wall-clock budget in seconds; 0 disables it.
    pub max_seconds: f64,
    pub seed: u64,
    pub full_grad_every: usize,
}

/// One row of a trace. `full_grad_norm` is NaN when not evaluated.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SscnRecord {
    pub k: usize,
    pub tau: usize,
    pub f: f64,
    pub grad_subset_norm: f64,
    pub full_grad_norm: f64,
    pub step_norm: f64,
    pub m: f64,
    pub coord_cost: u64,
    pub cum_coord_cost: u64,
    pub elapsed_s: f64,
    pub m_retries: usize,
}

/// Opaque LIBSVM dataset.
pub struct SscnDataset(SparseDataset);

/// Opaque objective.
pub struct SscnObjective(Box<dyn Objective + Send>);

/// Opaque run trace.
pub struct SscnTrace(RunTrace);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(SscnStatus, String);

impl From<SscnError> for Failure {
    fn from(e: SscnError) -> Self {
        let status = match e {
            SscnError::Parse { .. } | SscnError::Format { .. } | SscnError::Label { .. } | SscnError::EmptyDataset => {
                SscnStatus::Parse
            }
            SscnError::Io(_) => SscnStatus::Io,
            SscnError::Diverged { .. } => SscnStatus::Diverged,
            SscnError::NonFiniteCurvature | SscnError::HardCase => SscnStatus::Numerical,
            _ => SscnStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(SscnStatus::NullPointer, format!("{name} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(SscnStatus::InvalidArgument, msg.into())
}

/// Runs `f`, converting failures and panics into a status plus last-error message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SscnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SscnStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SscnStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn reference<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn out_ptr<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn c_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{name} is not valid UTF-8")))
}

fn hint(n: usize) -> Option<usize> {
    (n > 0).then_some(n)
}

/// Message of the last failure on this thread, or NULL. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn sscn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses LIBSVM text. `n_features` 0 infers the width from the data.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sscn_dataset_parse(text: *const c_char, n_features: usize, out: *mut *mut SscnDataset) -> SscnStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let ds = parse_libsvm_str(c_str(text, "text")?, hint(n_features))?;
        *out = Box::into_raw(Box::new(SscnDataset(ds)));
        Ok(())
    })
}

/// Loads a LIBSVM file. `n_features` 0 infers the width from the data.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sscn_dataset_load(path: *const c_char, n_features: usize, out: *mut *mut SscnDataset) -> SscnStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let ds = load_libsvm(std::path::Path::new(c_str(path, "path")?), hint(n_features))?;
        *out = Box::into_raw(Box::new(SscnDataset(ds)));
        Ok(())
    })
}

/// Sizes of a dataset. Any output pointer may be NULL.
///
/// # Safety
/// `ds` must come from this library; non-null outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn sscn_dataset_stats(
    ds: *const SscnDataset,
    n_samples: *mut usize,
    n_features: *mut usize,
    nnz: *mut usize,
) -> SscnStatus {
    guard(|| {
        let s = reference(ds, "ds")?.0.stats();
        if let Some(p) = n_samples.as_mut() {
            *p = s.n_samples;
        }
        if let Some(p) = n_features.as_mut() {
            *p = s.n_features;
        }
        if let Some(p) = nnz.as_mut() {
            *p = s.nnz;
        }
        Ok(())
    })
}

/// # Safety
/// `ds` must be NULL or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sscn_dataset_free(ds: *mut SscnDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// L2-regularized logistic loss over a copy of `ds`. `normalize` nonzero
/// divides the loss by the sample count.
///
/// # Safety
/// `ds` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sscn_objective_logistic_new(
    ds: *const SscnDataset,
    lambda: f64,
    normalize: c_int,
    out: *mut *mut SscnObjective,
) -> SscnStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let obj = RegularizedLogistic::new(reference(ds, "ds")?.0.clone(), lambda, normalize != 0)?;
        *out = Box::into_raw(Box::new(SscnObjective(Box::new(obj))));
        Ok(())
    })
}

/// `½xᵀAx + bᵀx` with `A` given row-major as `n × n` and symmetrized.
///
/// # Safety
/// `a` must hold `n*n` values, `b` `n` values and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sscn_objective_quadratic_new(
    a: *const f64,
    b: *const f64,
    n: usize,
    out: *mut *mut SscnObjective,
) -> SscnStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if n == 0 {
            return Err(invalid("dimension must be positive"));
        }
        let a = DMatrix::from_row_slice(n, n, slice(a, n * n, "a")?);
        let obj = Quadratic::new(a, slice(b, n, "b")?.to_vec())?;
        *out = Box::into_raw(Box::new(SscnObjective(Box::new(obj))));
        Ok(())
    })
}

/// # Safety
/// `obj` must be NULL or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sscn_objective_free(obj: *mut SscnObjective) {
    if !obj.is_null() {
        drop(Box::from_raw(obj));
    }
}

/// Dimension of `obj`, or 0 when `obj` is NULL.
///
/// # Safety
/// `obj` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn sscn_objective_dim(obj: *const SscnObjective) -> usize {
    obj.as_ref().map_or(0, |o| o.0.dim())
}

/// # Safety
/// `x` must hold `n` values and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sscn_objective_value(obj: *const SscnObjective, x: *const f64, n: usize, out: *mut f64) -> SscnStatus {
    guard(|| {
        let obj = &reference(obj, "obj")?.0;
        let x = slice(x, n, "x")?;
        obj.check_point(x)?;
        *out_ptr(out, "out")? = obj.value(x);
        Ok(())
    })
}

/// Writes the full gradient into `grad`.
///
/// # Safety
/// `x` and `grad` must each hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn sscn_objective_gradient(obj: *const SscnObjective, x: *const f64, n: usize, grad: *mut f64) -> SscnStatus {
    guard(|| {
        let obj = &reference(obj, "obj")?.0;
        let x = slice(x, n, "x")?;
        obj.check_point(x)?;
        let out = slice_mut(grad, n, "grad")?;
        out.copy_from_slice(&obj.grad_full(x));
        Ok(())
    })
}

/// Global minimizer of `⟨g,h⟩ + ½⟨Qh,h⟩ + (M/6)‖h‖³` with `Q` row-major
/// `tau × tau`. Writes the step to `h` and the model value to `model_value`
/// (which may be NULL).
///
/// # Safety
/// `g` and `h` must hold `tau` values, `q` `tau*tau` values.
#[no_mangle]
pub unsafe extern "C" fn sscn_solve_cubic(
    g: *const f64,
    q: *const f64,
    tau: usize,
    m: f64,
    tol: f64,
    h: *mut f64,
    model_value: *mut f64,
) -> SscnStatus {
    guard(|| {
        let g = slice(g, tau, "g")?.to_vec();
        let q = DMatrix::from_row_slice(tau, tau, slice(q, tau * tau, "q")?);
        let out = slice_mut(h, tau, "h")?;
        let sol = solve_global(&CubicModel::from_parts(g, q, m)?, tol)?;
        out.copy_from_slice(&sol.h_star);
        if let Some(p) = model_value.as_mut() {
            *p = sol.model_value;
        }
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn sscn_run_options_default() -> SscnRunOptions {
    let stop = StopCriteria::default();
    SscnRunOptions {
        tau: 0,
        fixed_m: 0.0,
        m0: 1.0,
        curvature: SscnCurvature::Exact,
        grad_tol: stop.grad_tol,
        max_iters: stop.max_iters,
        max_seconds: 0.0,
        seed: 0,
        full_grad_every: 1,
    }
}

fn to_config(o: &SscnRunOptions, n: usize) -> OptimizerConfig {
    let tau = if o.tau == 0 { n } else { o.tau };
    let mut cfg = OptimizerConfig::new(SamplingSchedule::Constant { tau });
    cfg.m_policy = if o.fixed_m > 0.0 {
        MPolicy::Fixed { m: o.fixed_m }
    } else {
        match MPolicy::default() {
            MPolicy::AdaptiveDoubling { grow, shrink, m_min, .. } => MPolicy::AdaptiveDoubling { m0: o.m0, grow, shrink, m_min },
            other => other,
        }
    };
    cfg.curvature = match o.curvature {
        SscnCurvature::Exact => CurvatureSource::ExactSubHessian,
        SscnCurvature::Zero => CurvatureSource::Zero,
        SscnCurvature::FiniteDifference => CurvatureSource::FiniteDifference { delta: None },
    };
    cfg.stop = StopCriteria {
        grad_tol: o.grad_tol,
        max_iters: o.max_iters,
        max_seconds: (o.max_seconds > 0.0).then_some(o.max_seconds),
    };
    cfg.seed = o.seed;
    cfg.full_grad_every = o.full_grad_every;
    cfg
}

/// Runs the optimizer from `x0`. `options` NULL uses the defaults.
///
/// # Safety
/// `obj` must come from this library, `x0` hold `n` values, `options` be
/// NULL or valid and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sscn_run(
    obj: *const SscnObjective,
    x0: *const f64,
    n: usize,
    options: *const SscnRunOptions,
    out: *mut *mut SscnTrace,
) -> SscnStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let obj = &reference(obj, "obj")?.0;
        let x0 = slice(x0, n, "x0")?;
        let opts = options.as_ref().copied().unwrap_or_else(|| sscn_run_options_default());
        let trace = run(obj.as_ref(), x0, &to_config(&opts, obj.dim()))?;
        *out = Box::into_raw(Box::new(SscnTrace(trace)));
        Ok(())
    })
}

/// # Safety
/// `trace` must be NULL or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sscn_trace_free(trace: *mut SscnTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Number of records, or 0 when `trace` is NULL.
///
/// # Safety
/// `trace` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn sscn_trace_len(trace: *const SscnTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.records.len())
}

/// # Safety
/// `trace` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sscn_trace_record(trace: *const SscnTrace, index: usize, out: *mut SscnRecord) -> SscnStatus {
    guard(|| {
        let t = &reference(trace, "trace")?.0;
        let r = t
            .records
            .get(index)
            .ok_or_else(|| invalid(format!("record {index} out of range for {} records", t.records.len())))?;
        *out_ptr(out, "out")? = SscnRecord {
            k: r.k,
            tau: r.tau,
            f: r.f_value,
            grad_subset_norm: r.grad_subset_norm,
            full_grad_norm: r.full_grad_norm.unwrap_or(f64::NAN),
            step_norm: r.step_norm,
            m: r.m_k,
            coord_cost: r.coord_cost,
            cum_coord_cost: r.cumulative_coord_cost,
            elapsed_s: r.elapsed_seconds,
            m_retries: r.m_retries,
        };
        Ok(())
    })
}

/// Copies the final iterate into `x`, which must hold exactly the problem dimension.
///
/// # Safety
/// `trace` must come from this library and `x` hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn sscn_trace_final_x(trace: *const SscnTrace, x: *mut f64, n: usize) -> SscnStatus {
    guard(|| {
        let t = &reference(trace, "trace")?.0;
        if n != t.final_x.len() {
            return Err(SscnError::DimensionMismatch { expected: t.final_x.len(), got: n }.into());
        }
        slice_mut(x, n, "x")?.copy_from_slice(&t.final_x);
        Ok(())
    })
}

/// # Safety
/// `trace` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sscn_trace_termination(trace: *const SscnTrace, out: *mut SscnTermination) -> SscnStatus {
    guard(|| {
        let t = &reference(trace, "trace")?.0;
        *out_ptr(out, "out")? = match t.termination {
            Termination::GradTol => SscnTermination::GradTol,
            Termination::MaxIters => SscnTermination::MaxIters,
            Termination::MaxTime => SscnTermination::MaxTime,
        };
        Ok(())
    })
}
