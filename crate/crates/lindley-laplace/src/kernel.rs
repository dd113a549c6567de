//! Closed-form interval integrals of shifted exponential polynomials.
//!
//! Everything the coefficient recursions need reduces to integrals of
//! `sum_k c_k (y-s)^k e^{lam y}` over an interval, plus the expansion of the
//! antiderivative around the moving kink of the Laplace kernel. The
//! antiderivative is
//!
//! ```text
//! int sum_k c_k (y-s)^k e^{lam y} dy = e^{lam y} sum_r g_r (y-s)^r,
//! g_r = sum_{k>=r} c_k (-1)^{k-r} (k!/r!) lam^{-(k-r+1)},
//! ```
//!
//! which is the incomplete-gamma finite expansion in disguise: evaluating it
//! at an interval endpoint reproduces the `Gamma(1+k, ...)` terms of the
//! recursions, and evaluating it at the kink yields the polynomial part of
//! the next step's coefficients.

/// Compensated (Neumaier) accumulator for short alternating sums.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Acc {
    s: f64,
    c: f64,
}

impl Acc {
    pub fn new() -> Self {
        Acc { s: 0.0, c: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.s + self.c
    }
}

/// Evaluate `sum_k c_k t^k` by Horner's rule.
#[inline]
pub(crate) fn horner(c: &[f64], t: f64) -> f64 {
    let mut v = 0.0;
    for &ck in c.iter().rev() {
        v = v * t + ck;
    }
    v
}

/// `sum_k c_k (y-s)^{k+1} / (k+1)` — antiderivative of the plain polynomial.
pub(crate) fn poly_prim_at(c: &[f64], s: f64, y: f64) -> f64 {
    if c.is_empty() || c.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    debug_assert!(y.is_finite(), "polynomial antiderivative at infinity");
    let t = y - s;
    let mut v = 0.0;
    for k in (0..c.len()).rev() {
        v = v * t + c[k] / (k + 1) as f64;
    }
    v * t
}

/// `int_lo^hi sum_k c_k (y-s)^k dy`.
pub(crate) fn poly_int(c: &[f64], s: f64, lo: f64, hi: f64) -> f64 {
    if c.is_empty() {
        return 0.0;
    }
    poly_prim_at(c, s, hi) - poly_prim_at(c, s, lo)
}

/// Coefficients `g_r` of the exponential-polynomial antiderivative above.
pub(crate) fn antideriv_poly_part(c: &[f64], lam: f64) -> Vec<f64> {
    let mut g = vec![0.0; c.len()];
    for (r, gr) in g.iter_mut().enumerate() {
        let mut w = 1.0 / lam;
        let mut acc = Acc::new();
        for (k, &ck) in c.iter().enumerate().skip(r) {
            if k > r {
                w *= -(k as f64) / lam;
            }
            acc.add(ck * w);
        }
        *gr = acc.value();
    }
    g
}

/// Re-express `sum_k c_k (t + d)^k` as `sum_j e_j t^j`:
/// `e_j = sum_{k>=j} c_k C(k,j) d^{k-j}`. Used to move a piece's polynomial
/// to a different shift; well conditioned as long as `|d|` stays of the
/// order of the evaluation range.
pub(crate) fn recenter_poly(c: &[f64], d: f64) -> Vec<f64> {
    if d == 0.0 || c.len() <= 1 {
        return c.to_vec();
    }
    let mut e = vec![0.0; c.len()];
    for (j, ej) in e.iter_mut().enumerate() {
        let mut acc = Acc::new();
        let mut w = 1.0; // C(k,j) d^{k-j}, starting at k = j
        for (k, &ck) in c.iter().enumerate().skip(j) {
            if k > j {
                acc_update_weight(&mut w, d, k, j);
            }
            acc.add(ck * w);
        }
        *ej = acc.value();
    }
    e
}

#[inline]
fn acc_update_weight(w: &mut f64, d: f64, k: usize, j: usize) {
    // C(k,j)/C(k-1,j) = k/(k-j)
    *w *= d * k as f64 / (k - j) as f64;
}

/// Evaluate the antiderivative `e^{lam y} sum_r g_r (y-s)^r` at `y`; an
/// infinite endpoint on the decaying side contributes 0.
pub(crate) fn exp_prim_at(g: &[f64], lam: f64, s: f64, y: f64) -> f64 {
    if g.is_empty() {
        return 0.0;
    }
    if y.is_infinite() {
        debug_assert!(
            lam * y.signum() < 0.0 || g.iter().all(|&v| v == 0.0),
            "divergent exponential endpoint"
        );
        return 0.0;
    }
    (lam * y).exp() * horner(g, y - s)
}

/// `int_lo^hi sum_k c_k (y-s)^k e^{lam y} dy` in closed form.
pub(crate) fn exp_poly_int(c: &[f64], s: f64, lam: f64, lo: f64, hi: f64) -> f64 {
    if c.is_empty() {
        return 0.0;
    }
    let g = antideriv_poly_part(c, lam);
    exp_prim_at(&g, lam, s, hi) - exp_prim_at(&g, lam, s, lo)
}

/// Antiderivative evaluation with an extra log-space prefactor folded into
/// the exponent before exponentiating.
pub(crate) fn exp_prim_at_scaled(g: &[f64], lam: f64, s: f64, y: f64, extra_log: f64) -> f64 {
    if g.is_empty() {
        return 0.0;
    }
    if y.is_infinite() {
        debug_assert!(
            lam * y.signum() < 0.0 || g.iter().all(|&v| v == 0.0),
            "divergent exponential endpoint"
        );
        return 0.0;
    }
    (extra_log + lam * y).exp() * horner(g, y - s)
}

/// `e^{extra_log} * int_lo^hi sum_k c_k (y-s)^k e^{lam y} dy`.
pub(crate) fn exp_poly_int_scaled(
    c: &[f64],
    s: f64,
    lam: f64,
    lo: f64,
    hi: f64,
    extra_log: f64,
) -> f64 {
    if c.is_empty() {
        return 0.0;
    }
    let g = antideriv_poly_part(c, lam);
    exp_prim_at_scaled(&g, lam, s, hi, extra_log) - exp_prim_at_scaled(&g, lam, s, lo, extra_log)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        let h = (hi - lo) / n as f64;
        let mut s = f(lo) + f(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(lo + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn poly_integral_matches_quadrature() {
        let c = [0.7, -1.3, 0.25, 2.0];
        let s = 1.4;
        let got = poly_int(&c, s, 0.3, 2.9);
        let want = simpson(|y| horner(&c, y - s), 0.3, 2.9, 2000);
        assert!((got - want).abs() < 1e-10);
    }

    #[test]
    fn exp_poly_integral_matches_quadrature() {
        let c = [0.4, 1.1, -0.6];
        let s = -0.8;
        for &lam in &[2.0, -2.0, 0.5, -0.5] {
            let got = exp_poly_int(&c, s, lam, 0.2, 3.1);
            let want = simpson(|y| horner(&c, y - s) * (lam * y).exp(), 0.2, 3.1, 4000);
            assert!(
                (got - want).abs() < 1e-8 * want.abs().max(1.0),
                "lam={lam}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn decaying_tail_to_infinity() {
        let c = [1.0, 0.5];
        let s = 2.0;
        let got = exp_poly_int(&c, s, -1.5, 4.0, f64::INFINITY);
        let want = simpson(|y| horner(&c, y - s) * (-1.5 * y).exp(), 4.0, 44.0, 40_000);
        assert!((got - want).abs() < 1e-10);
    }

    #[test]
    fn antiderivative_differentiates_back() {
        let c = [0.3, -0.9, 0.11, 0.07];
        let lam = -2.4;
        let s = 0.6;
        let g = antideriv_poly_part(&c, lam);
        let f = |y: f64| exp_prim_at(&g, lam, s, y);
        let y = 1.37;
        let h = 1e-5;
        let deriv = (f(y + h) - f(y - h)) / (2.0 * h);
        let want = horner(&c, y - s) * (lam * y).exp();
        assert!((deriv - want).abs() < 1e-6 * want.abs().max(1.0));
    }
}
