//! C interface to the adaptive-stepsize optimizer.
//!
//! The surface is a classic opaque-handle API: [`l4opt_create`] allocates an
//! optimizer for a fixed parameter dimension, [`l4opt_step`] feeds it one
//! `(loss, gradient)` observation and updates the caller's parameter buffer
//! in place, getters expose what the last step did, and [`l4opt_free`]
//! releases the handle. Every entry point returns an [`L4Status`] code (or a
//! well-defined sentinel for getters) instead of unwinding; panics are caught
//! at the boundary and reported as [`L4Status::InternalPanic`].
//!
//! The generated header lives at `include/l4opt.h` and is refreshed on every
//! build of this crate.
//!
//! # First step
//!
//! The handle initializes its minimum-loss estimate from the first observed
//! loss (`L_min = gamma0 * first_loss`). The first [`l4opt_step`] call both
//! performs that initialization and applies the first update with the same
//! observation, so callers just call `step` in a loop with no separate warmup.
//!
//! # Thread safety
//!
//! A handle may be moved between threads but must not be used from two
//! threads at once; there is no internal synchronization.

use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use l4opt::l4::{L4Config, L4State, StepRecord};

/// Momentum-direction flavor tag for [`L4Params::flavor`].
pub const L4_FLAVOR_MOM: i32 = 0;
/// Adam-style-direction flavor tag for [`L4Params::flavor`].
pub const L4_FLAVOR_ADAM: i32 = 1;

/// Status code returned by every fallible entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum L4Status {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A configuration value violates its documented range, the flavor tag
    /// is unknown, or the dimension is zero.
    InvalidConfig = 2,
    /// The loss was negative (losses must be non-negative by contract).
    InvalidLoss = 3,
    /// The loss, gradient, or updated parameter vector stopped being finite.
    Diverged = 4,
    /// The buffer length passed to `l4opt_step` does not match the dimension
    /// the handle was created with.
    DimensionMismatch = 5,
    /// An internal panic was caught at the boundary; the handle is left in
    /// an unspecified but memory-safe state and should be freed.
    InternalPanic = 6,
}

/// Hyperparameters for [`l4opt_create`]. Obtain a defaults-filled value from
/// [`l4opt_params_default`] and override selectively; `alpha` is the only
/// field that normally gets touched.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct L4Params {
    /// Fraction of the loss gap to close per step. Default 0.15.
    pub alpha: f64,
    /// Fraction of the minimum-loss estimate used as the step target,
    /// in (0, 1]. Default 0.9.
    pub gamma: f64,
    /// Fraction of the first observed loss used to initialize the
    /// minimum-loss estimate, in (0, 1]. Default 0.75.
    pub gamma0: f64,
    /// Forgetting timescale of the minimum-loss estimate, in steps.
    /// Default 1000.
    pub tau: f64,
    /// Additive guard in the stepsize denominator. Default 1e-12.
    pub epsilon: f64,
    /// Timescale of the gradient moving average. Default 10.
    pub tau_m: f64,
    /// Timescale of the squared-gradient moving average (Adam flavor only).
    /// Default 1000.
    pub tau_s: f64,
    /// `L4_FLAVOR_MOM` or `L4_FLAVOR_ADAM`. Kept as a plain integer so that
    /// out-of-range values arriving from C are a checkable error instead of
    /// undefined behavior.
    pub flavor: i32,
}

/// Opaque optimizer handle.
pub struct L4Handle {
    config: L4Config,
    dim: usize,
    state: Option<L4State>,
    last: Option<StepRecord>,
}

fn config_of(p: &L4Params) -> Option<L4Config> {
    let base = match p.flavor {
        L4_FLAVOR_MOM => L4Config::mom(),
        L4_FLAVOR_ADAM => L4Config::adam(),
        _ => return None,
    };
    Some(L4Config {
        alpha: p.alpha,
        gamma: p.gamma,
        gamma0: p.gamma0,
        tau: p.tau,
        epsilon: p.epsilon,
        tau_m: p.tau_m,
        tau_s: p.tau_s,
        flavor: base.flavor,
    })
}

fn status_of(err: &l4opt::Error) -> L4Status {
    match err {
        l4opt::Error::InvalidConfig { .. } => L4Status::InvalidConfig,
        l4opt::Error::InvalidLoss { .. } => L4Status::InvalidLoss,
        l4opt::Error::Diverged { .. } | l4opt::Error::NonFinite { .. } => L4Status::Diverged,
        _ => L4Status::InternalPanic,
    }
}

/// The recommended hyperparameters for the given flavor tag.
///
/// Unknown tags yield the momentum defaults with the tag passed through, so
/// the error is surfaced (as `L4_STATUS_INVALID_CONFIG`) when the value
/// reaches [`l4opt_create`] rather than silently repaired here.
#[no_mangle]
pub extern "C" fn l4opt_params_default(flavor: i32) -> L4Params {
    let c = if flavor == L4_FLAVOR_ADAM {
        L4Config::adam()
    } else {
        L4Config::mom()
    };
    L4Params {
        alpha: c.alpha,
        gamma: c.gamma,
        gamma0: c.gamma0,
        tau: c.tau,
        epsilon: c.epsilon,
        tau_m: c.tau_m,
        tau_s: c.tau_s,
        flavor,
    }
}

/// Allocate an optimizer for `dim`-dimensional parameters.
///
/// Validates the configuration eagerly (range checks, known flavor tag,
/// `dim > 0`) and writes the new handle to `*out` on success. On any error
/// `*out` is left untouched.
///
/// # Safety
///
/// `params` and `out` must be valid for reads/writes of their types.
#[no_mangle]
pub unsafe extern "C" fn l4opt_create(
    params: *const L4Params,
    dim: usize,
    out: *mut *mut L4Handle,
) -> L4Status {
    if params.is_null() || out.is_null() {
        return L4Status::NullPointer;
    }
    let p = &*params;
    match catch_unwind(AssertUnwindSafe(|| {
        let config = match config_of(p) {
            Some(c) => c,
            None => return Err(L4Status::InvalidConfig),
        };
        if dim == 0 {
            return Err(L4Status::InvalidConfig);
        }
        if let Err(e) = config.validate() {
            return Err(status_of(&e));
        }
        Ok(Box::into_raw(Box::new(L4Handle {
            config,
            dim,
            state: None,
            last: None,
        })))
    })) {
        Ok(Ok(handle)) => {
            *out = handle;
            L4Status::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => L4Status::InternalPanic,
    }
}

/// Feed one `(loss, gradient)` observation and update `theta` in place.
///
/// `grad` and `theta` must each point to `len` doubles, and `len` must equal
/// the dimension the handle was created with. The first call initializes the
/// minimum-loss estimate from `loss` and then applies the first update with
/// the same observation.
///
/// On `L4_STATUS_DIVERGED` the non-finite value is reported before any state
/// it would corrupt is kept: a non-finite loss or gradient leaves `theta`
/// untouched, while parameters that became non-finite during the update are
/// left in the buffer for inspection.
///
/// # Safety
///
/// `handle` must come from [`l4opt_create`] and not have been freed; `grad`
/// and `theta` must be valid for `len` reads (and writes, for `theta`).
#[no_mangle]
pub unsafe extern "C" fn l4opt_step(
    handle: *mut L4Handle,
    loss: f64,
    grad: *const f64,
    theta: *mut f64,
    len: usize,
) -> L4Status {
    if handle.is_null() || grad.is_null() || theta.is_null() {
        return L4Status::NullPointer;
    }
    let h = &mut *handle;
    if len != h.dim {
        return L4Status::DimensionMismatch;
    }
    let grad = std::slice::from_raw_parts(grad, len);
    let theta = std::slice::from_raw_parts_mut(theta, len);
    match catch_unwind(AssertUnwindSafe(|| {
        if h.state.is_none() {
            h.state = Some(L4State::init(&h.config, loss)?);
        }
        h.state.as_mut().expect("state present").step(&h.config, loss, grad, theta)
    })) {
        Ok(Ok(record)) => {
            h.last = Some(record);
            L4Status::Ok
        }
        Ok(Err(e)) => status_of(&e),
        Err(_) => L4Status::InternalPanic,
    }
}

/// The stepsize applied by the most recent successful step, or NaN if no
/// step has succeeded yet (or `handle` is null).
#[no_mangle]
pub unsafe extern "C" fn l4opt_last_eta(handle: *const L4Handle) -> f64 {
    match handle.as_ref().and_then(|h| h.last.as_ref()) {
        Some(r) => r.eta,
        None => f64::NAN,
    }
}

/// The `g.v` inner product of the most recent successful step (non-negative
/// by construction), or NaN if no step has succeeded yet (or `handle` is
/// null).
#[no_mangle]
pub unsafe extern "C" fn l4opt_last_gv(handle: *const L4Handle) -> f64 {
    match handle.as_ref().and_then(|h| h.last.as_ref()) {
        Some(r) => r.gv,
        None => f64::NAN,
    }
}

/// The current minimum-loss estimate, or NaN before the first step (or if
/// `handle` is null).
#[no_mangle]
pub unsafe extern "C" fn l4opt_lmin(handle: *const L4Handle) -> f64 {
    match handle.as_ref().and_then(|h| h.state.as_ref()) {
        Some(s) => s.lmin(),
        None => f64::NAN,
    }
}

/// Number of successful parameter updates performed, 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn l4opt_steps(handle: *const L4Handle) -> u64 {
    match handle.as_ref().and_then(|h| h.state.as_ref()) {
        Some(s) => s.steps(),
        None => 0,
    }
}

/// Release a handle. Null is accepted and ignored.
///
/// # Safety
///
/// `handle` must come from [`l4opt_create`] and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn l4opt_free(handle: *mut L4Handle) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// A static, null-terminated description of a status code. Accepts the raw
/// integer so that any value coming back from the API (or an arbitrary int)
/// can be looked up safely; unknown values yield `"unknown status"`.
#[no_mangle]
pub extern "C" fn l4opt_status_message(status: i32) -> *const c_char {
    let message: &'static std::ffi::CStr = match status {
        0 => c"ok",
        1 => c"a required pointer was null",
        2 => c"invalid configuration",
        3 => c"loss must be non-negative",
        4 => c"non-finite loss, gradient, or parameters",
        5 => c"buffer length does not match the handle's dimension",
        6 => c"internal panic caught at the boundary",
        _ => c"unknown status",
    };
    message.as_ptr()
}
