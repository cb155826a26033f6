//! C ABI over `marriage_oc`.
//!
//! Every fallible function returns a [`MocStatus`]; on failure a message is
//! available from [`moc_last_error_message`] on the same thread. Results are
//! opaque [`MocResult`] handles released with [`moc_result_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use marriage_oc::analysis::{
    classify_adjoint_equilibrium, singularity_report, style_classify, Classification, Style, StyleThresholds,
    SINGULAR_TOL,
};
use marriage_oc::model::objective;
use marriage_oc::perturbation::{perturbation_trajectory, Order};
use marriage_oc::{fbs_solve, Epsilon, Error, Grid, ModelParams, SolverConfig, Trajectory};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MocStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Diverged = 3,
    BufferTooSmall = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MocClassification {
    Saddle = 0,
    UnstableNode = 1,
    UnstableSpiral = 2,
    Degenerate = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MocStyle {
    ConflictAvoiding = 0,
    Validating = 1,
    Mixed = 2,
}

/// Trajectory columns accepted by [`moc_result_copy_column`].
pub const MOC_COLUMN_T: i32 = 0;
pub const MOC_COLUMN_X1: i32 = 1;
pub const MOC_COLUMN_X2: i32 = 2;
pub const MOC_COLUMN_LAMBDA1: i32 = 3;
pub const MOC_COLUMN_LAMBDA2: i32 = 4;
pub const MOC_COLUMN_U1: i32 = 5;
pub const MOC_COLUMN_U2: i32 = 6;

/// Model constants. `epsilon` is ignored when `epsilon_infinite` is set.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MocParams {
    pub r1: f64,
    pub r2: f64,
    pub xbar1: f64,
    pub xbar2: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub epsilon_infinite: bool,
    pub u0: f64,
    pub u1max: f64,
    pub u2max: f64,
    pub horizon: f64,
    pub x1_0: f64,
    pub x2_0: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MocSolverConfig {
    pub n_steps: usize,
    pub tolerance: f64,
    pub relaxation: f64,
    pub max_iters: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MocEquilibrium {
    pub classification: MocClassification,
    pub mu_plus_re: f64,
    pub mu_plus_im: f64,
    pub mu_minus_re: f64,
    pub mu_minus_im: f64,
    /// False when the fixed point is at infinity.
    pub has_point: bool,
    pub lambda1: f64,
    pub lambda2: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MocSingularity {
    pub u1_singular_capable: bool,
    pub u2_singular_capable: bool,
    pub u2_singular_capable_literal: bool,
}

/// Opaque solved trajectory with its diagnostics.
pub struct MocResult {
    trajectory: Trajectory,
    converged: bool,
    iterations: usize,
    objective: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> MocStatus {
    match err {
        Error::Divergence { .. } | Error::SolveDiverged { .. } => MocStatus::Diverged,
        _ => MocStatus::InvalidArgument,
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), MocStatus>) -> MocStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MocStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            MocStatus::Panic
        }
    }
}

fn fail(err: Error) -> MocStatus {
    set_error(err.to_string());
    status_of(&err)
}

fn null(name: &str) -> MocStatus {
    set_error(format!("`{name}` is null"));
    MocStatus::NullPointer
}

impl From<&MocParams> for ModelParams {
    fn from(p: &MocParams) -> Self {
        ModelParams {
            r1: p.r1,
            r2: p.r2,
            xbar1: p.xbar1,
            xbar2: p.xbar2,
            alpha: p.alpha,
            epsilon: if p.epsilon_infinite {
                Epsilon::Infinite
            } else {
                Epsilon::Finite(p.epsilon)
            },
            u0: p.u0,
            u1max: p.u1max,
            u2max: p.u2max,
            horizon: p.horizon,
            x1_0: p.x1_0,
            x2_0: p.x2_0,
        }
    }
}

impl From<&ModelParams> for MocParams {
    fn from(p: &ModelParams) -> Self {
        let (epsilon, epsilon_infinite) = match p.epsilon {
            Epsilon::Finite(e) => (e, false),
            Epsilon::Infinite => (0.0, true),
        };
        MocParams {
            r1: p.r1,
            r2: p.r2,
            xbar1: p.xbar1,
            xbar2: p.xbar2,
            alpha: p.alpha,
            epsilon,
            epsilon_infinite,
            u0: p.u0,
            u1max: p.u1max,
            u2max: p.u2max,
            horizon: p.horizon,
            x1_0: p.x1_0,
            x2_0: p.x2_0,
        }
    }
}

fn style_code(s: Style) -> MocStyle {
    match s {
        Style::ConflictAvoiding => MocStyle::ConflictAvoiding,
        Style::Validating => MocStyle::Validating,
        Style::Mixed => MocStyle::Mixed,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn moc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL.
///
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn moc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Fills `out` with the default sweep settings.
///
/// # Safety
/// `out` must be NULL or point to writable memory for one `MocSolverConfig`.
#[no_mangle]
pub unsafe extern "C" fn moc_solver_config_default(out: *mut MocSolverConfig) -> MocStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let d = SolverConfig::default();
        *out = MocSolverConfig {
            n_steps: d.n_steps,
            tolerance: d.tolerance,
            relaxation: d.relaxation,
            max_iters: d.max_iters,
        };
        Ok(())
    })
}

/// Checks every parameter constraint.
///
/// # Safety
/// `params` must be NULL or point to a valid `MocParams`.
#[no_mangle]
pub unsafe extern "C" fn moc_params_validate(params: *const MocParams) -> MocStatus {
    guard(|| {
        let p = ModelParams::from(params.as_ref().ok_or_else(|| null("params"))?);
        p.validate().map_err(fail)
    })
}

/// Solves with the forward-backward sweep. On success `*out` owns a new
/// handle; running out of iterations is still a success with
/// `moc_result_converged` false.
///
/// # Safety
/// `params` and `config` must point to valid structs and `out` to writable
/// storage for one pointer. `config` may be NULL for the defaults.
#[no_mangle]
pub unsafe extern "C" fn moc_solve(
    params: *const MocParams,
    config: *const MocSolverConfig,
    out: *mut *mut MocResult,
) -> MocStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = ptr::null_mut();
        let p = ModelParams::from(params.as_ref().ok_or_else(|| null("params"))?);
        let cfg = match config.as_ref() {
            Some(c) => SolverConfig {
                n_steps: c.n_steps,
                tolerance: c.tolerance,
                relaxation: c.relaxation,
                max_iters: c.max_iters,
                ..SolverConfig::default()
            },
            None => SolverConfig::default(),
        };
        let r = fbs_solve(&p, &cfg).map_err(fail)?;
        *out = Box::into_raw(Box::new(MocResult {
            trajectory: r.trajectory,
            converged: r.converged,
            iterations: r.iterations,
            objective: r.objective_value,
        }));
        Ok(())
    })
}

/// Assembles the small-epsilon expansion of order 0 or 1 on `n_steps`
/// intervals. The handle reports `converged` true and zero iterations.
///
/// # Safety
/// As for [`moc_solve`].
#[no_mangle]
pub unsafe extern "C" fn moc_perturb(
    params: *const MocParams,
    n_steps: usize,
    order: i32,
    out: *mut *mut MocResult,
) -> MocStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = ptr::null_mut();
        let p = ModelParams::from(params.as_ref().ok_or_else(|| null("params"))?);
        p.validate().map_err(fail)?;
        let order = u8::try_from(order)
            .map_err(|_| marriage_oc::Error::InvalidParameter {
                key: "order",
                constraint: format!("must be 0 or 1, got {order}"),
            })
            .and_then(Order::try_from)
            .map_err(fail)?;
        let grid = Grid::new(n_steps, p.horizon).map_err(fail)?;
        let pt = perturbation_trajectory(&p, &grid, order).map_err(fail)?;
        let objective = objective(&p, &pt.assembled).map_err(fail)?;
        *out = Box::into_raw(Box::new(MocResult {
            trajectory: pt.assembled,
            converged: true,
            iterations: 0,
            objective,
        }));
        Ok(())
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `result` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn moc_result_free(result: *mut MocResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Number of grid nodes, 0 for NULL.
///
/// # Safety
/// `result` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn moc_result_len(result: *const MocResult) -> usize {
    result.as_ref().map_or(0, |r| r.trajectory.len())
}

/// # Safety
/// `result` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn moc_result_converged(result: *const MocResult) -> bool {
    result.as_ref().is_some_and(|r| r.converged)
}

/// # Safety
/// `result` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn moc_result_iterations(result: *const MocResult) -> usize {
    result.as_ref().map_or(0, |r| r.iterations)
}

/// Payoff of the trajectory; NaN for NULL.
///
/// # Safety
/// `result` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn moc_result_objective(result: *const MocResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.objective)
}

/// Copies one column (`MOC_COLUMN_*`) into `buf`, which must hold at least
/// `moc_result_len` values.
///
/// # Safety
/// `result` must be a live handle and `buf` must point to `len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn moc_result_copy_column(
    result: *const MocResult,
    column: i32,
    buf: *mut f64,
    len: usize,
) -> MocStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let t = &r.trajectory;
        let n = t.len();
        if len < n {
            set_error(format!("buffer holds {len} values, {n} needed"));
            return Err(MocStatus::BufferTooSmall);
        }
        let dst = std::slice::from_raw_parts_mut(buf, n);
        match column {
            MOC_COLUMN_T => dst.iter_mut().enumerate().for_each(|(k, v)| *v = t.time(k)),
            MOC_COLUMN_X1 => dst.copy_from_slice(&t.x1),
            MOC_COLUMN_X2 => dst.copy_from_slice(&t.x2),
            MOC_COLUMN_LAMBDA1 => dst.copy_from_slice(&t.lam1),
            MOC_COLUMN_LAMBDA2 => dst.copy_from_slice(&t.lam2),
            MOC_COLUMN_U1 => dst.copy_from_slice(&t.u1),
            MOC_COLUMN_U2 => dst.copy_from_slice(&t.u2),
            other => {
                set_error(format!("unknown column {other}"));
                return Err(MocStatus::InvalidArgument);
            }
        }
        Ok(())
    })
}

/// Interaction style of each spouse with the default thresholds.
///
/// # Safety
/// `result` must be a live handle, `params` a valid struct and both outputs
/// writable.
#[no_mangle]
pub unsafe extern "C" fn moc_result_styles(
    result: *const MocResult,
    params: *const MocParams,
    spouse1: *mut MocStyle,
    spouse2: *mut MocStyle,
) -> MocStatus {
    guard(|| {
        let r = result.as_ref().ok_or_else(|| null("result"))?;
        let p = ModelParams::from(params.as_ref().ok_or_else(|| null("params"))?);
        let s1 = spouse1.as_mut().ok_or_else(|| null("spouse1"))?;
        let s2 = spouse2.as_mut().ok_or_else(|| null("spouse2"))?;
        p.validate().map_err(fail)?;
        let v = style_classify(&r.trajectory, &p, &StyleThresholds::default());
        *s1 = style_code(v.spouse1.label);
        *s2 = style_code(v.spouse2.label);
        Ok(())
    })
}

/// Fixed point and eigenvalues of the adjoint system for frozen controls.
///
/// # Safety
/// `params` must point to a valid struct and `out` to writable memory.
#[no_mangle]
pub unsafe extern "C" fn moc_classify_equilibrium(
    params: *const MocParams,
    u1: f64,
    u2: f64,
    out: *mut MocEquilibrium,
) -> MocStatus {
    guard(|| {
        let p = ModelParams::from(params.as_ref().ok_or_else(|| null("params"))?);
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        if !(u1.is_finite() && u2.is_finite()) {
            set_error("controls must be finite");
            return Err(MocStatus::InvalidArgument);
        }
        let r = classify_adjoint_equilibrium(&p, u1, u2);
        *out = MocEquilibrium {
            classification: match r.classification {
                Classification::Saddle => MocClassification::Saddle,
                Classification::UnstableNode => MocClassification::UnstableNode,
                Classification::UnstableSpiral => MocClassification::UnstableSpiral,
                Classification::Degenerate => MocClassification::Degenerate,
            },
            mu_plus_re: r.mu_plus.re,
            mu_plus_im: r.mu_plus.im,
            mu_minus_re: r.mu_minus.re,
            mu_minus_im: r.mu_minus.im,
            has_point: r.point.is_some(),
            lambda1: r.point.map_or(f64::NAN, |q| q.lam1),
            lambda2: r.point.map_or(f64::NAN, |q| q.lam2),
        };
        Ok(())
    })
}

/// Singular-control conditions at the default tolerance.
///
/// # Safety
/// `params` must point to a valid struct and `out` to writable memory.
#[no_mangle]
pub unsafe extern "C" fn moc_singularity(params: *const MocParams, out: *mut MocSingularity) -> MocStatus {
    guard(|| {
        let p = ModelParams::from(params.as_ref().ok_or_else(|| null("params"))?);
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        p.validate().map_err(fail)?;
        let r = singularity_report(&p, SINGULAR_TOL);
        *out = MocSingularity {
            u1_singular_capable: r.u1_singular_capable,
            u2_singular_capable: r.u2_singular_capable,
            u2_singular_capable_literal: r.u2_singular_capable_literal,
        };
        Ok(())
    })
}
