//! Deterministic grid quadrature of the two integral identities behind the
//! closed forms.
//!
//! * Position: one convolution step of the density with the one-step
//!   transition kernel (an exponential kernel with a kink at `u - mu` plus
//!   the reflected mass at zero).
//! * First exit: one conditioning step of the exit pmf on the position
//!   reached at time 1, over `[0, h]`.
//!
//! Both kernels factor as `e^{+-(y - c)/sigma}`, so cumulative sums of
//! `e^{+-y/sigma} f(y)` give every output point in O(1) after an O(N)
//! sweep; the kink panel is integrated separately to keep the composite
//! rule's order (trapezoid here, Simpson for the exit step).

use crate::model::ProcessConfig;
use crate::{Error, Result};

/// A mixed law on a uniform grid: point mass `atom` at `atom_pos` plus
/// continuous values at `k * step`, `k = 0..values.len()-1`.
#[derive(Debug, Clone)]
pub struct GridFunction {
    pub step: f64,
    pub values: Vec<f64>,
    pub atom: f64,
    pub atom_pos: f64,
    /// Interior points where the sampled function has a derivative jump
    /// (the image of a point mass under one kernel step). Tracked so the
    /// Euler-Maclaurin mass corrections stay valid across kinks.
    pub kinks: Vec<f64>,
}

impl GridFunction {
    /// The pure point mass `delta(u - x)` (the law of `W_0`).
    pub fn dirac(x: f64, step: f64, hi: f64) -> Self {
        let n = (hi / step).round() as usize + 1;
        GridFunction {
            step,
            values: vec![0.0; n],
            atom: 1.0,
            atom_pos: x,
            kinks: vec![],
        }
    }

    pub fn domain_hi(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.step
    }

    /// Atom plus the mass of the continuous part: trapezoid sum with the
    /// Euler-Maclaurin corrections (endpoints and tracked kinks), which
    /// estimates the integral of the sampled function rather than of its
    /// linear interpolant.
    pub fn total_mass(&self) -> f64 {
        self.atom
            + trapezoid(&self.values, self.step)
            + self.correction_masses().iter().map(|&(_, m)| m).sum::<f64>()
    }

    /// Point masses that account for the gap between the sampled function
    /// and its linear interpolant (piecewise Euler-Maclaurin): `step^2/12`
    /// times the edge derivatives and the derivative jump at each kink.
    fn correction_masses(&self) -> Vec<(f64, f64)> {
        let step = self.step;
        let d2 = step * step / 12.0;
        let v = &self.values;
        let n = v.len();
        let mut out = vec![
            (0.0, d2 * edge_slope_lo(v, step)),
            (self.domain_hi(), -d2 * edge_slope_hi(v, step)),
        ];
        for &k in &self.kinks {
            let j = (k / step).round() as usize;
            if j < 2 || j + 2 >= n {
                continue;
            }
            let left = (3.0 * v[j] - 4.0 * v[j - 1] + v[j - 2]) / (2.0 * step);
            let right = (-3.0 * v[j] + 4.0 * v[j + 1] - v[j + 2]) / (2.0 * step);
            out.push((k, d2 * (right - left)));
        }
        out
    }
}

fn trapezoid(v: &[f64], step: f64) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let inner: f64 = v[1..v.len() - 1].iter().sum();
    step * (inner + 0.5 * (v[0] + v[v.len() - 1]))
}

fn edge_slope_lo(v: &[f64], step: f64) -> f64 {
    if v.len() < 3 {
        return 0.0;
    }
    (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * step)
}

fn edge_slope_hi(v: &[f64], step: f64) -> f64 {
    if v.len() < 3 {
        return 0.0;
    }
    let n = v.len();
    (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * step)
}

// Panel primitives for integrals of e^{z s} against linear data:
// phi1(z) = int_0^1 e^{z s} ds, phi2(z) = int_0^1 s e^{z s} ds.
fn phi1(z: f64) -> f64 {
    if z.abs() < 0.02 {
        // sum_k z^k / (k+1)!
        let mut acc = 0.0;
        for k in (1..=8).rev() {
            acc = (acc + 1.0 / crate::gammainc::factorial(k + 1)) * z;
        }
        acc + 1.0
    } else {
        (z.exp() - 1.0) / z
    }
}

fn phi2(z: f64) -> f64 {
    if z.abs() < 0.02 {
        // sum_k z^k / (k! (k+2))
        let mut acc = 0.0;
        for k in (1..=8).rev() {
            acc = (acc + 1.0 / (crate::gammainc::factorial(k) * (k + 2) as f64)) * z;
        }
        acc + 0.5
    } else {
        ((z - 1.0) * z.exp() + 1.0) / (z * z)
    }
}

/// `int_0^w e^{lam t} (p0 + (p1 - p0) t / w) dt`.
#[inline]
fn panel_exp_linear(lam: f64, w: f64, p0: f64, p1: f64) -> f64 {
    let z = lam * w;
    w * (p0 * phi1(z) + (p1 - p0) * phi2(z))
}

/// Domain large enough that the truncated tail after `n_steps` convolution
/// steps stays below the 1e-12 assertion.
pub fn suggested_domain(cfg: &ProcessConfig, n_steps: u32) -> f64 {
    cfg.x + n_steps as f64 * cfg.params.mu.max(0.0) + 50.0 * cfg.params.sigma
}

/// Laplace upper tail `P(Z > d)`.
fn laplace_tail(mu: f64, sigma: f64, d: f64) -> f64 {
    if d >= mu {
        0.5 * (-(d - mu) / sigma).exp()
    } else {
        1.0 - 0.5 * ((d - mu) / sigma).exp()
    }
}

/// Atom branch of the transition kernel: probability of being reflected to
/// exactly zero from position `y`.
fn stick_mass(mu: f64, sigma: f64, y: f64) -> f64 {
    if y > -mu {
        0.5 * (-(y + mu) / sigma).exp()
    } else {
        1.0 - 0.5 * ((y + mu) / sigma).exp()
    }
}

/// One convolution step of the position law with the transition kernel.
///
/// The continuous part is integrated exactly against its piecewise-linear
/// interpolant (product quadrature, O(step^2) overall), panels split at the
/// kernel kink; the sampling bias of the interpolant is compensated by two
/// Euler-Maclaurin endpoint masses so that one step conserves the reported
/// mass to far better than the quadrature's pointwise accuracy.
///
/// Fails if the mass pushed beyond the grid exceeds 1e-12 (domain too
/// small).
pub fn ck_convolve(prev: &GridFunction, params: &crate::model::LaplaceParams) -> Result<GridFunction> {
    let (mu, sigma) = (params.mu, params.sigma);
    let n = prev.values.len();
    let step = prev.step;
    let hi = prev.domain_hi();
    let p = &prev.values;

    // Tail check first: mass that the exact kernel would carry past the grid.
    let lost: f64 = {
        let mut acc = 0.0;
        for (j, &pv) in p.iter().enumerate() {
            let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            acc += w * pv * laplace_tail(mu, sigma, hi - j as f64 * step);
        }
        acc * step + prev.atom * laplace_tail(mu, sigma, hi - prev.atom_pos)
    };
    if lost > 1e-12 {
        return Err(Error::Numeric(format!(
            "convolution domain too small: tail mass {lost:e} beyond u={hi}"
        )));
    }

    // Euler-Maclaurin point masses (edges and tracked kinks): carrying the
    // interpolation deficit as point masses keeps the step mass-consistent.
    let corrections = prev.correction_masses();

    // Panel prefix sums at safe scales: pre_p[k] = int_0^{y_k} e^{(y-hi)/sigma} p,
    // suf_m[k] = int_{y_k}^{hi} e^{-y/sigma} p.
    let zp = step / sigma;
    let (f1p, f2p) = (phi1(zp), phi2(zp));
    let (f1m, f2m) = (phi1(-zp), phi2(-zp));
    let mut pre_p = vec![0.0; n];
    for j in 1..n {
        let w = ((j as f64 - 1.0) * step / sigma - hi / sigma).exp();
        pre_p[j] = pre_p[j - 1] + w * step * (p[j - 1] * f1p + (p[j] - p[j - 1]) * f2p);
    }
    let mut suf_m = vec![0.0; n];
    for j in (0..n - 1).rev() {
        let w = (-(j as f64) * step / sigma).exp();
        suf_m[j] = suf_m[j + 1] + w * step * (p[j] * f1m + (p[j + 1] - p[j]) * f2m);
    }

    let mut values = vec![0.0; n];
    for (i, out) in values.iter_mut().enumerate() {
        let u = i as f64 * step;
        let t_star = u - mu;
        // left: int_0^{t*} e^{(y-u+mu)/sigma} p(y) dy
        let left = if t_star <= 0.0 {
            0.0
        } else if t_star >= hi {
            ((hi - u + mu) / sigma).exp() * pre_p[n - 1]
        } else {
            let j = ((t_star / step) as usize).min(n - 2);
            let tau = t_star - j as f64 * step;
            let slope = (p[j + 1] - p[j]) / step;
            let pk = p[j] + slope * tau;
            let w = (j as f64 * step / sigma - hi / sigma).exp();
            let partial = w * panel_exp_linear(1.0 / sigma, tau, p[j], pk);
            ((hi - u + mu) / sigma).exp() * (pre_p[j] + partial)
        };
        // right: int_{t*}^{hi} e^{(u-mu-y)/sigma} p(y) dy
        let right = if t_star >= hi {
            0.0
        } else if t_star <= 0.0 {
            ((u - mu) / sigma).exp() * suf_m[0]
        } else {
            let j = ((t_star / step) as usize).min(n - 2);
            let tau = t_star - j as f64 * step;
            let slope = (p[j + 1] - p[j]) / step;
            let pk = p[j] + slope * tau;
            // complement of the panel's leading part
            let w = (-(j as f64) * step / sigma).exp();
            let lead = w * panel_exp_linear(-1.0 / sigma, tau, p[j], pk);
            let full = w * step * (p[j] * f1m + (p[j + 1] - p[j]) * f2m);
            ((u - mu) / sigma).exp() * (suf_m[j + 1] + full - lead)
        };
        let from_atom = prev.atom * (-(u - prev.atom_pos - mu).abs() / sigma).exp();
        let from_corr: f64 = corrections
            .iter()
            .map(|&(pos, m)| m * (-(u - pos - mu).abs() / sigma).exp())
            .sum();
        *out = (left + right + from_atom + from_corr) / (2.0 * sigma);
    }

    // Atom update: integrate the stick probability against the law. The
    // reflected branch below -mu splits each straddling panel exactly.
    let mut atom = prev.atom * stick_mass(mu, sigma, prev.atom_pos);
    for &(pos, m) in &corrections {
        atom += m * stick_mass(mu, sigma, pos);
    }
    // exponential branch: e^{-(y+mu)/sigma}/2 over (max(0,-mu), hi)
    let knee = (-mu).clamp(0.0, hi);
    atom += 0.5 * (-mu / sigma).exp() * exp_linear_int(p, step, -1.0 / sigma, knee, hi);
    // reflected branch: 1 - e^{(y+mu)/sigma}/2 over (0, knee)
    if knee > 0.0 {
        atom += plain_linear_int(p, step, 0.0, knee)
            - 0.5 * (mu / sigma).exp() * exp_linear_int(p, step, 1.0 / sigma, 0.0, knee);
    }

    // the only new derivative jump is the image of the previous point mass
    let mut kinks = Vec::new();
    let img = prev.atom_pos + mu;
    if prev.atom > 0.0 && img > 2.0 * step && img < hi - 2.0 * step {
        kinks.push(img);
    }
    Ok(GridFunction {
        step,
        values,
        atom,
        atom_pos: 0.0,
        kinks,
    })
}

/// `int_a^b e^{lam y} p(y) dy` for the piecewise-linear `p`, exact.
fn exp_linear_int(p: &[f64], step: f64, lam: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = p.len();
    let mut acc = 0.0;
    let ja = (a / step).floor().max(0.0) as usize;
    let jb = ((b / step).ceil() as usize).min(n - 1);
    for j in ja..jb {
        let (ya, yb) = (j as f64 * step, (j + 1) as f64 * step);
        let lo = a.max(ya);
        let hi = b.min(yb);
        if hi <= lo {
            continue;
        }
        let slope = (p[j + 1] - p[j]) / step;
        let p_lo = p[j] + slope * (lo - ya);
        let p_hi = p[j] + slope * (hi - ya);
        acc += (lam * lo).exp() * panel_exp_linear(lam, hi - lo, p_lo, p_hi);
    }
    acc
}

/// `int_a^b p(y) dy` for the piecewise-linear `p`, exact.
fn plain_linear_int(p: &[f64], step: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = p.len();
    let mut acc = 0.0;
    let ja = (a / step).floor().max(0.0) as usize;
    let jb = ((b / step).ceil() as usize).min(n - 1);
    for j in ja..jb {
        let (ya, yb) = (j as f64 * step, (j + 1) as f64 * step);
        let lo = a.max(ya);
        let hi = b.min(yb);
        if hi <= lo {
            continue;
        }
        let slope = (p[j + 1] - p[j]) / step;
        let p_lo = p[j] + slope * (lo - ya);
        let p_hi = p[j] + slope * (hi - ya);
        acc += 0.5 * (hi - lo) * (p_lo + p_hi);
    }
    acc
}

// ---------------------------------------------------------------------------
// Exit-time recursion oracle
// ---------------------------------------------------------------------------

/// `P(n | .)` sampled on a uniform grid over `[0, h]` (node count odd so the
/// panel count suits composite Simpson).
#[derive(Debug, Clone)]
pub struct ExitGrid {
    pub h: f64,
    pub values: Vec<f64>,
}

impl ExitGrid {
    pub fn nodes(&self) -> usize {
        self.values.len()
    }

    pub fn step(&self) -> f64 {
        self.h / (self.values.len() - 1) as f64
    }

    /// Cubic (4-point Lagrange) interpolation; the grids are fine enough
    /// that this is far below the quadrature error.
    pub fn interp(&self, t: f64) -> f64 {
        let m = self.values.len();
        let step = self.step();
        let j = ((t / step).floor() as isize - 1).clamp(0, m as isize - 4) as usize;
        let mut acc = 0.0;
        for k in 0..4 {
            let mut w = 1.0;
            let xk = (j + k) as f64 * step;
            for l in 0..4 {
                if l != k {
                    let xl = (j + l) as f64 * step;
                    w *= (t - xl) / (xk - xl);
                }
            }
            acc += w * self.values[j + k];
        }
        acc
    }
}

/// Exit probability at time 1, `P(1|x) = 1 - F_1(h|x)`, straight from the
/// one-step distribution function; the chain's exact starting point.
pub fn exit_base(cfg: &ProcessConfig, nodes: usize) -> ExitGrid {
    let h = cfg.h.expect("exit oracle needs a boundary");
    let (mu, sigma) = (cfg.params.mu, cfg.params.sigma);
    let step = h / (nodes - 1) as f64;
    let values = (0..nodes)
        .map(|i| {
            let x = i as f64 * step;
            if x > -mu && h <= x + mu {
                1.0 - 0.5 * ((h - mu - x) / sigma).exp()
            } else {
                0.5 * ((mu + x - h) / sigma).exp()
            }
        })
        .collect();
    ExitGrid { h, values }
}

/// One conditioning step: `P(n+1|x) = m0(x) P(n|0) + int_0^h k(y|x) P(n|y) dy`
/// by composite Simpson with the kernel kink at `y = x + mu` split out.
pub fn exit_recursion_step(prev: &ExitGrid, cfg: &ProcessConfig) -> ExitGrid {
    let m = prev.nodes();
    assert!(m >= 5 && (m - 1).is_multiple_of(2), "need an even panel count");
    let values = (0..m)
        .map(|i| exit_step_eval(prev, cfg, i as f64 * prev.step()))
        .collect();
    ExitGrid { h: prev.h, values }
}

/// The same step evaluated at one arbitrary `x` in `[0, h)`.
pub fn exit_step_eval(prev: &ExitGrid, cfg: &ProcessConfig, x: f64) -> f64 {
    let (mu, sigma) = (cfg.params.mu, cfg.params.sigma);
    let h = prev.h;
    let m = prev.nodes();
    let step = prev.step();

    let gl = |y: f64, v: f64| (y / sigma).exp() * v;
    let gr = |y: f64, v: f64| (-y / sigma).exp() * v;

    let y_star = (x + mu).clamp(0.0, h);

    // Simpson over the whole pairs left of y*, then a split partial pair.
    let mut left = 0.0;
    let mut right = 0.0;
    let pairs = (m - 1) / 2;
    let full_left_pairs = ((y_star / (2.0 * step)).floor() as usize).min(pairs);
    for k in 0..full_left_pairs {
        let j = 2 * k;
        left += step / 3.0
            * (gl(j as f64 * step, prev.values[j])
                + 4.0 * gl((j + 1) as f64 * step, prev.values[j + 1])
                + gl((j + 2) as f64 * step, prev.values[j + 2]));
    }
    let lo_rest = 2.0 * step * full_left_pairs as f64;
    if y_star > lo_rest {
        // partial piece [lo_rest, y*] with its own 2-panel Simpson
        let mid = 0.5 * (lo_rest + y_star);
        left += (y_star - lo_rest) / 6.0
            * (gl(lo_rest, prev.interp(lo_rest))
                + 4.0 * gl(mid, prev.interp(mid))
                + gl(y_star, prev.interp(y_star)));
    }
    // right side: partial [y*, hi_rest], then whole pairs up to h
    let first_right_pair = ((y_star / (2.0 * step)).ceil() as usize).min(pairs);
    let hi_rest = 2.0 * step * first_right_pair as f64;
    if hi_rest > y_star {
        let mid = 0.5 * (y_star + hi_rest);
        right += (hi_rest - y_star) / 6.0
            * (gr(y_star, prev.interp(y_star))
                + 4.0 * gr(mid, prev.interp(mid))
                + gr(hi_rest, prev.interp(hi_rest)));
    }
    for k in first_right_pair..pairs {
        let j = 2 * k;
        right += step / 3.0
            * (gr(j as f64 * step, prev.values[j])
                + 4.0 * gr((j + 1) as f64 * step, prev.values[j + 1])
                + gr((j + 2) as f64 * step, prev.values[j + 2]));
    }

    let cont = ((-(x + mu) / sigma).exp() * left + ((x + mu) / sigma).exp() * right) / (2.0 * sigma);
    cont + stick_mass(mu, sigma, x) * prev.values[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LaplaceParams, ProcessConfig};

    fn cfg(mu: f64, sigma: f64, x: f64, h: Option<f64>) -> ProcessConfig {
        ProcessConfig::new(LaplaceParams::new(mu, sigma).unwrap(), x, h).unwrap()
    }

    /// One application to the pure point mass reproduces the one-step law
    /// exactly (the atom path bypasses the grid entirely).
    #[test]
    fn dirac_step_reproduces_one_step_law() {
        let c = cfg(0.3, 1.0, 1.0, None);
        let hi = suggested_domain(&c, 1);
        let step = 1e-3;
        let f0 = GridFunction::dirac(1.0, step, hi);
        let f1 = ck_convolve(&f0, &c.params).unwrap();
        // atom: e^{-(x+mu)/sigma}/2
        let want_atom = 0.5 * (-(1.0 + 0.3) / 1.0f64).exp();
        assert!((f1.atom - want_atom).abs() < 1e-15);
        // continuous part: e^{-|u - x - mu|}/2
        for (j, &v) in f1.values.iter().enumerate().step_by(997) {
            let u = j as f64 * step;
            let want = 0.5 * (-(u - 1.3f64).abs()).exp();
            assert!((v - want).abs() < 1e-14, "u={u}");
        }
    }

    #[test]
    fn convolution_conserves_mass() {
        let c = cfg(0.3, 1.0, 1.0, None);
        let hi = suggested_domain(&c, 3);
        let f0 = GridFunction::dirac(1.0, 1e-3, hi);
        let mut f = ck_convolve(&f0, &c.params).unwrap();
        for _ in 0..2 {
            f = ck_convolve(&f, &c.params).unwrap();
            assert!((f.total_mass() - 1.0).abs() < 1e-9, "mass={}", f.total_mass());
        }
    }

    #[test]
    fn too_small_domain_is_rejected() {
        // tail of the very first step past u=5 is ~ e^{-3}/2, far over 1e-12
        let c = cfg(1.0, 1.0, 1.0, None);
        let f0 = GridFunction::dirac(1.0, 1e-3, 5.0);
        assert!(ck_convolve(&f0, &c.params).is_err());
    }

    #[test]
    fn exit_step_is_linear_and_bounded() {
        let c = cfg(0.0, 1.0, 1.0, Some(3.0));
        let p1 = exit_base(&c, 2001);
        let p2 = exit_recursion_step(&p1, &c);
        let doubled = ExitGrid {
            h: p1.h,
            values: p1.values.iter().map(|v| 2.0 * v).collect(),
        };
        let p2d = exit_recursion_step(&doubled, &c);
        let sup_prev = p1.values.iter().cloned().fold(0.0f64, f64::max);
        for i in (0..p2.values.len()).step_by(197) {
            assert!((p2d.values[i] - 2.0 * p2.values[i]).abs() < 1e-12);
            assert!(p2.values[i] <= sup_prev + 1e-12);
        }
    }
}
