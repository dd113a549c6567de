//! C ABI over the lindley-laplace library: opaque handles, status codes,
//! plain doubles. Every entry point is panic-safe and null-safe; results
//! come back through out-pointers so the status code is the only return
//! value.
//!
//! Pointers are checked for null before any dereference; the usual FFI
//! contract applies to non-null pointers (they must point at live handles
//! from this library or writable doubles), which is why the functions stay
//! callable without `unsafe` on the Rust side.
#![allow(clippy::not_unsafe_ptr_arg_deref)]

use lindley_laplace::{cusum, density, fet, model, Error};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Status code of every FFI call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LlStatus {
    /// Success.
    Ok = 0,
    /// A parameter violated a precondition (bad sigma, x outside [0, h), ...).
    InvalidArgument = 1,
    /// An evaluation point was outside the function's domain.
    DomainError = 2,
    /// A numerical invariant failed (non-convergent tail, mass defect, ...).
    NumericError = 3,
    /// A required pointer was null.
    NullPointer = 4,
    /// Internal panic; the handle state is untouched.
    Panic = 5,
}

fn status_of(e: &Error) -> LlStatus {
    match e {
        Error::InvalidParameter(_) => LlStatus::InvalidArgument,
        Error::Domain(_) => LlStatus::DomainError,
        Error::RegimeMismatch { .. } => LlStatus::InvalidArgument,
        Error::Numeric(_) => LlStatus::NumericError,
    }
}

fn guarded<F: FnOnce() -> LlStatus>(f: F) -> LlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => LlStatus::Panic,
    }
}

/// Opaque handle: the law of the position `W_n` for one configuration.
pub struct LlDensity {
    inner: model::MixedDensity,
}

/// Opaque handle: tabulated first-exit-time probabilities `P(n|x)`,
/// `n = 1..=n_max`.
pub struct LlFetTable {
    inner: model::FetDistribution,
}

fn make_config(mu: f64, sigma: f64, x: f64, h: Option<f64>) -> Result<model::ProcessConfig, Error> {
    let params = model::LaplaceParams::new(mu, sigma)?;
    model::ProcessConfig::new(params, x, h)
}

/// Build the closed-form law of `W_n` started at `x`. On success writes a
/// heap handle to `out`; release it with `ll_density_free`.
#[no_mangle]
pub extern "C" fn ll_density_new(
    mu: f64,
    sigma: f64,
    x: f64,
    n: u32,
    out: *mut *mut LlDensity,
) -> LlStatus {
    if out.is_null() {
        return LlStatus::NullPointer;
    }
    guarded(|| {
        let built = make_config(mu, sigma, x, None).and_then(|cfg| density::density_at(&cfg, n));
        match built {
            Ok(inner) => {
                let handle = Box::new(LlDensity { inner });
                unsafe { *out = Box::into_raw(handle) };
                LlStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Continuous-part density value at `u >= 0` (the atom is reported by
/// `ll_density_atom`).
#[no_mangle]
pub extern "C" fn ll_density_eval(d: *const LlDensity, u: f64, out: *mut f64) -> LlStatus {
    if d.is_null() || out.is_null() {
        return LlStatus::NullPointer;
    }
    guarded(|| {
        let d = unsafe { &*d };
        match d.inner.evaluate(u) {
            Ok(v) => {
                unsafe { *out = v };
                LlStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Probability mass sitting exactly at zero.
#[no_mangle]
pub extern "C" fn ll_density_atom(d: *const LlDensity, out: *mut f64) -> LlStatus {
    if d.is_null() || out.is_null() {
        return LlStatus::NullPointer;
    }
    let d = unsafe { &*d };
    unsafe { *out = d.inner.atom };
    LlStatus::Ok
}

/// Distribution function `F_n(u)`; negative `u` yields 0.
#[no_mangle]
pub extern "C" fn ll_density_cdf(d: *const LlDensity, u: f64, out: *mut f64) -> LlStatus {
    if d.is_null() || out.is_null() {
        return LlStatus::NullPointer;
    }
    guarded(|| {
        let d = unsafe { &*d };
        unsafe { *out = density::cdf(&d.inner, u) };
        LlStatus::Ok
    })
}

/// Moment of order 1 or 2.
#[no_mangle]
pub extern "C" fn ll_density_moment(d: *const LlDensity, order: u32, out: *mut f64) -> LlStatus {
    if d.is_null() || out.is_null() {
        return LlStatus::NullPointer;
    }
    guarded(|| {
        let d = unsafe { &*d };
        match density::moments(&d.inner, order) {
            Ok(v) => {
                unsafe { *out = v };
                LlStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Release a density handle; a null pointer is a no-op.
#[no_mangle]
pub extern "C" fn ll_density_free(d: *mut LlDensity) {
    if !d.is_null() {
        drop(unsafe { Box::from_raw(d) });
    }
}

/// Tabulate `P(n|x)` for `n = 1..=n_max` with boundary `h`. Release with
/// `ll_fet_table_free`.
#[no_mangle]
pub extern "C" fn ll_fet_table_new(
    mu: f64,
    sigma: f64,
    x: f64,
    h: f64,
    n_max: u32,
    out: *mut *mut LlFetTable,
) -> LlStatus {
    if out.is_null() {
        return LlStatus::NullPointer;
    }
    guarded(|| {
        let built = make_config(mu, sigma, x, Some(h)).and_then(|cfg| fet::fet_table(&cfg, n_max));
        match built {
            Ok(inner) => {
                let handle = Box::new(LlFetTable { inner });
                unsafe { *out = Box::into_raw(handle) };
                LlStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Exit probability exactly at step `n` from start `x` (any `x` in `[0, h)`,
/// not just the tabulation start).
#[no_mangle]
pub extern "C" fn ll_fet_pmf(t: *const LlFetTable, n: u32, x: f64, out: *mut f64) -> LlStatus {
    if t.is_null() || out.is_null() {
        return LlStatus::NullPointer;
    }
    guarded(|| {
        let t = unsafe { &*t };
        match t.inner.pmf(n, x) {
            Ok(v) => {
                unsafe { *out = v };
                LlStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Partial sum `sum_{k<=n} P(k|x)`.
#[no_mangle]
pub extern "C" fn ll_fet_cdf(t: *const LlFetTable, n: u32, x: f64, out: *mut f64) -> LlStatus {
    if t.is_null() || out.is_null() {
        return LlStatus::NullPointer;
    }
    guarded(|| {
        let t = unsafe { &*t };
        let mut acc = 0.0;
        for k in 1..=n {
            match t.inner.pmf(k, x) {
                Ok(v) => acc += v,
                Err(e) => return status_of(&e),
            }
        }
        unsafe { *out = acc };
        LlStatus::Ok
    })
}

/// Release an exit-time table; a null pointer is a no-op.
#[no_mangle]
pub extern "C" fn ll_fet_table_free(t: *mut LlFetTable) {
    if !t.is_null() {
        drop(unsafe { Box::from_raw(t) });
    }
}

/// Mean exit time with a geometric tail bound at relative tolerance
/// `rel_tol`; `out_tail_bound` may be null.
#[no_mangle]
pub extern "C" fn ll_fet_mean(
    mu: f64,
    sigma: f64,
    x: f64,
    h: f64,
    rel_tol: f64,
    out_mean: *mut f64,
    out_tail_bound: *mut f64,
) -> LlStatus {
    if out_mean.is_null() {
        return LlStatus::NullPointer;
    }
    guarded(|| {
        let run = make_config(mu, sigma, x, Some(h)).and_then(|cfg| fet::mean_fet(&cfg, rel_tol));
        match run {
            Ok(m) => {
                unsafe { *out_mean = m.mean };
                if !out_tail_bound.is_null() {
                    unsafe { *out_tail_bound = m.tail_bound };
                }
                LlStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Map a CUSUM testing problem (pre-change `Laplace(mu, sigma)`, tilt
/// `theta`) to the detector's increment law. Out-pointers other than the
/// first two may be null.
#[no_mangle]
pub extern "C" fn ll_cusum_llr_params(
    mu: f64,
    sigma: f64,
    theta: f64,
    out_location: *mut f64,
    out_scale: *mut f64,
    out_log_mgf: *mut f64,
    out_post_change_mean: *mut f64,
) -> LlStatus {
    if out_location.is_null() || out_scale.is_null() {
        return LlStatus::NullPointer;
    }
    guarded(|| {
        let base = match model::LaplaceParams::new(mu, sigma) {
            Ok(b) => b,
            Err(e) => return status_of(&e),
        };
        // threshold only gates positivity; the mapping itself needs none
        let spec = match cusum::CusumSpec::new(base, theta, 1.0) {
            Ok(s) => s,
            Err(e) => return status_of(&e),
        };
        match spec.llr_params() {
            Ok(p) => {
                unsafe {
                    *out_location = p.mu;
                    *out_scale = p.sigma;
                }
                if !out_log_mgf.is_null() {
                    unsafe { *out_log_mgf = spec.log_mgf() };
                }
                if !out_post_change_mean.is_null() {
                    unsafe { *out_post_change_mean = spec.post_change_mean() };
                }
                LlStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}
