//! Integer-order upper incomplete gamma values.
//!
//! For integer order `n >= 1`,
//!
//! ```text
//! Gamma(n, y) = int_y^inf t^{n-1} e^{-t} dt = (n-1)! e^{-y} sum_{r=0}^{n-1} y^r / r!
//! ```
//!
//! The finite sum is exact and, unlike the integral, is meaningful for
//! negative `y` as well; the recursions that build position and exit-time
//! coefficients feed arguments of both signs. For negative `y` the sum
//! alternates and can cancel by many orders of magnitude, so it is
//! accumulated in double-double arithmetic: the result keeps close to full
//! f64 relative accuracy over the whole range the recursions use.

use crate::{Error, Result};

/// Largest order whose factorial prefactor stays finite in f64.
pub const MAX_ORDER: usize = 171;

static FACTORIALS: [f64; MAX_ORDER] = build_factorials();

const fn build_factorials() -> [f64; MAX_ORDER] {
    let mut t = [1.0_f64; MAX_ORDER];
    let mut i = 1;
    while i < MAX_ORDER {
        t[i] = t[i - 1] * i as f64;
        i += 1;
    }
    t
}

/// `n!` as f64, exact for `n <= 22` and correctly rounded beyond.
///
/// # Panics
/// Panics if `n >= 171` (the result would overflow f64).
pub fn factorial(n: usize) -> f64 {
    FACTORIALS[n]
}

/// Natural log of `n!`.
pub fn ln_factorial(n: usize) -> f64 {
    FACTORIALS[n].ln()
}

// --- double-double helpers -------------------------------------------------

#[derive(Clone, Copy, Debug)]
struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

impl Dd {
    #[inline]
    fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    fn add(self, other: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        let (hi, lo) = two_sum(s, e);
        Dd { hi, lo }
    }

    #[inline]
    fn mul_f64(self, c: f64) -> Dd {
        let (p, e) = two_prod(self.hi, c);
        let e = e + self.lo * c;
        let (hi, lo) = two_sum(p, e);
        Dd { hi, lo }
    }

    #[inline]
    fn div_f64(self, c: f64) -> Dd {
        let q0 = self.hi / c;
        let (p, e) = two_prod(q0, c);
        let r = (self.hi - p) - e + self.lo;
        let q1 = r / c;
        let (hi, lo) = two_sum(q0, q1);
        Dd { hi, lo }
    }

    #[inline]
    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// `sum_{r=0}^{n} y^r / r!` — the truncated exponential series, in
/// double-double precision.
pub(crate) fn trunc_exp_series(n: usize, y: f64) -> f64 {
    let mut term = Dd::new(1.0);
    let mut sum = Dd::new(1.0);
    for r in 1..=n {
        term = term.mul_f64(y).div_f64(r as f64);
        sum = sum.add(term);
    }
    sum.value()
}

/// Upper incomplete gamma `Gamma(order, y)` for integer `order >= 1`.
///
/// Valid for negative `y` too (analytic continuation through the finite
/// sum); the result may then exceed `Gamma(order) = (order-1)!`.
pub fn gamma_upper_int(order: usize, y: f64) -> Result<f64> {
    if order == 0 || order >= MAX_ORDER {
        return Err(Error::Domain(format!(
            "gamma_upper_int: order must be in 1..{MAX_ORDER}, got {order}"
        )));
    }
    if !y.is_finite() {
        if y == f64::INFINITY {
            return Ok(0.0);
        }
        return Err(Error::Domain(format!("gamma_upper_int: argument {y}")));
    }
    Ok(gamma_upper_int_scaled(order, y, 0.0))
}

/// `e^{log_factor} * Gamma(order, y)` with the exponents combined before
/// exponentiation, for callers that fold prefactors in log space.
pub(crate) fn gamma_upper_int_scaled(order: usize, y: f64, log_factor: f64) -> f64 {
    debug_assert!((1..MAX_ORDER).contains(&order));
    if y == f64::INFINITY {
        return 0.0;
    }
    let n = order - 1;
    let s = trunc_exp_series(n, y);
    // factorial kept separate: its log is exact enough and n! alone can be
    // the dominant magnitude.
    factorial(n) * (log_factor - y).exp() * s
}

/// `Gamma(order, phi_b) - Gamma(order, phi_a)`; an infinite endpoint
/// contributes 0.
pub fn gamma_upper_int_diff(order: usize, phi_at_b: f64, phi_at_a: f64) -> Result<f64> {
    let gb = gamma_upper_int(order, phi_at_b)?;
    let ga = gamma_upper_int(order, phi_at_a)?;
    Ok(gb - ga)
}
