//! Parameter objects, regime dispatch, and the piecewise data model shared
//! by the position-density and first-exit-time engines.

use crate::kernel;
use crate::{Error, Result};
use serde::Serialize;

/// Location `mu` and scale `sigma` of the Laplace increment law
/// `f_Z(z) = e^{-|z-mu|/sigma} / (2 sigma)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaplaceParams {
    pub mu: f64,
    pub sigma: f64,
}

impl LaplaceParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() || !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "Laplace law requires finite mu and sigma > 0, got mu={mu}, sigma={sigma}"
            )));
        }
        Ok(LaplaceParams { mu, sigma })
    }

    /// `E[Z] = mu`.
    pub fn mean(&self) -> f64 {
        self.mu
    }

    /// `Var[Z] = 2 sigma^2`.
    pub fn variance(&self) -> f64 {
        2.0 * self.sigma * self.sigma
    }
}

/// A Lindley process instance: increment law, start `W_0 = x`, and the
/// optional upper boundary `h` for first-exit-time questions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProcessConfig {
    pub params: LaplaceParams,
    pub x: f64,
    pub h: Option<f64>,
}

impl ProcessConfig {
    pub fn new(params: LaplaceParams, x: f64, h: Option<f64>) -> Result<Self> {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "start position must satisfy x >= 0, got {x}"
            )));
        }
        if let Some(h) = h {
            if !h.is_finite() || h <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "boundary must satisfy h > 0, got {h}"
                )));
            }
            if x >= h {
                return Err(Error::InvalidParameter(format!(
                    "start position must lie below the boundary, got x={x}, h={h}"
                )));
            }
        }
        Ok(ProcessConfig { params, x, h })
    }

    /// Absolute tolerance for boundary-membership comparisons at knots.
    pub fn snap_tol(&self) -> f64 {
        1e-12 * 1.0_f64.max(self.x.abs()).max(self.h.map_or(0.0, f64::abs))
    }
}

/// Which position recursion applies. The three cases partition the
/// parameter space: the drift sign decides, with the `-x < mu < 0` band
/// split off because the upper knot `x + n mu` travels toward 0 there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PositionRegime {
    /// `mu >= 0`
    MuNonNeg,
    /// `-x < mu < 0`
    MuNegSmall,
    /// `mu <= -x`
    MuNegLarge,
}

impl PositionRegime {
    pub fn label(&self) -> &'static str {
        match self {
            PositionRegime::MuNonNeg => "position/mu>=0",
            PositionRegime::MuNegSmall => "position/-x<mu<0",
            PositionRegime::MuNegLarge => "position/mu<=-x",
        }
    }
}

/// Which first-exit-time recursion applies: sign of `mu` and its order
/// relative to the boundary `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FetRegime {
    /// `0 < mu < h`
    MuPosLtH,
    /// `mu >= h > 0`
    MuPosGeH,
    /// `mu < 0`, `-mu < h`
    MuNeg,
    /// `mu < 0`, `-mu >= h`
    MuNegGeH,
    /// `mu = 0`
    MuZero,
}

impl FetRegime {
    pub fn label(&self) -> &'static str {
        match self {
            FetRegime::MuPosLtH => "fet/0<mu<h",
            FetRegime::MuPosGeH => "fet/0<h<=mu",
            FetRegime::MuNeg => "fet/mu<0,-mu<h",
            FetRegime::MuNegGeH => "fet/0<h<=-mu",
            FetRegime::MuZero => "fet/mu=0",
        }
    }
}

/// Select the position recursion for a configuration. Total on valid
/// configs: `mu = 0` maps to [`PositionRegime::MuNonNeg`], `mu = -x` to
/// [`PositionRegime::MuNegLarge`].
pub fn dispatch_position_regime(cfg: &ProcessConfig) -> PositionRegime {
    let mu = cfg.params.mu;
    if mu >= 0.0 {
        PositionRegime::MuNonNeg
    } else if mu > -cfg.x {
        PositionRegime::MuNegSmall
    } else {
        PositionRegime::MuNegLarge
    }
}

/// Select the first-exit-time recursion. Requires `h` present and
/// `0 <= x < h`; the boundaries `mu = h` and `-mu = h` map to the
/// single-piece corollary regimes.
pub fn dispatch_fet_regime(cfg: &ProcessConfig) -> Result<FetRegime> {
    let h = cfg
        .h
        .ok_or_else(|| Error::InvalidParameter("first-exit dispatch requires a boundary".into()))?;
    if h <= 0.0 || cfg.x >= h {
        return Err(Error::InvalidParameter(format!(
            "first-exit dispatch requires 0 <= x < h, got x={}, h={h}",
            cfg.x
        )));
    }
    let mu = cfg.params.mu;
    Ok(if mu == 0.0 {
        FetRegime::MuZero
    } else if mu > 0.0 {
        if mu >= h {
            FetRegime::MuPosGeH
        } else {
            FetRegime::MuPosLtH
        }
    } else if -mu >= h {
        FetRegime::MuNegGeH
    } else {
        FetRegime::MuNeg
    })
}

/// One interval piece of a piecewise exponential polynomial,
///
/// ```text
/// e^{log_scale} * ( sum_j a_j t^j e^{u/sigma} + sum_j b_j t^j e^{-u/sigma} + const_term ),
/// t = u - shift.
/// ```
///
/// `const_term` carries the flat part of exit-time pieces and is zero for
/// densities. `log_scale` absorbs the growing prefactors of deep recursion
/// steps; coefficients are renormalized so their largest magnitude is 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpPolySegment {
    pub lo: f64,
    /// Upper end; may be `+inf`, in which case all `a_j` must vanish.
    pub hi: f64,
    pub shift: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub const_term: f64,
    pub log_scale: f64,
}

impl ExpPolySegment {
    /// Value of the piece at `u` (which must lie in the piece), with the
    /// exponentials and `log_scale` combined in log space.
    pub fn eval(&self, u: f64, sigma: f64) -> f64 {
        let t = u - self.shift;
        let mut v = 0.0;
        if !self.a.is_empty() {
            v += (self.log_scale + u / sigma).exp() * kernel::horner(&self.a, t);
        }
        if !self.b.is_empty() {
            v += (self.log_scale - u / sigma).exp() * kernel::horner(&self.b, t);
        }
        if self.const_term != 0.0 {
            v += self.log_scale.exp() * self.const_term;
        }
        v
    }

    /// `int_lo^hi` of the piece's exponential part (`const_term` excluded),
    /// in closed form.
    pub(crate) fn mass(&self, sigma: f64) -> f64 {
        let pa = kernel::exp_poly_int_scaled(
            &self.a,
            self.shift,
            1.0 / sigma,
            self.lo,
            self.hi,
            self.log_scale,
        );
        let pb = kernel::exp_poly_int_scaled(
            &self.b,
            self.shift,
            -1.0 / sigma,
            self.lo,
            self.hi,
            self.log_scale,
        );
        pa + pb
    }

    /// Rescale so the largest coefficient magnitude is 1, folding the factor
    /// into `log_scale`.
    pub(crate) fn renormalize(&mut self) {
        let m = self
            .a
            .iter()
            .chain(self.b.iter())
            .chain(std::iter::once(&self.const_term))
            .fold(0.0_f64, |acc, &c| acc.max(c.abs()));
        if m > 0.0 && m.is_finite() {
            let inv = 1.0 / m;
            for c in self.a.iter_mut().chain(self.b.iter_mut()) {
                *c *= inv;
            }
            self.const_term *= inv;
            self.log_scale += m.ln();
        }
    }
}

/// The law of `W_n`: an atom of mass `atom` at 0 plus contiguous
/// exponential-polynomial segments covering `(0, inf)`.
///
/// `n = 0` is the degenerate point mass at the start position, flagged by
/// `dirac_at`; it has no segments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixedDensity {
    pub n: u32,
    /// Mass at zero (`c_n`).
    pub atom: f64,
    /// Ordered segments partitioning `(0, inf)`; intervals are left-open,
    /// right-closed.
    pub segments: Vec<ExpPolySegment>,
    pub regime: PositionRegime,
    pub sigma: f64,
    /// Set only for `n = 0`: the position of the initial point mass.
    pub dirac_at: Option<f64>,
}

impl MixedDensity {
    /// Continuous-part value at `u >= 0`. At `u = 0` this is the right
    /// limit of the first segment (the atom is reported separately).
    pub fn evaluate(&self, u: f64) -> Result<f64> {
        if u.is_nan() || u < 0.0 {
            return Err(Error::Domain(format!("density evaluated at u={u} < 0")));
        }
        if let Some(x0) = self.dirac_at {
            return Ok(if u == x0 && u > 0.0 { f64::INFINITY } else { 0.0 });
        }
        // Left-open/right-closed membership; u = 0 falls to the first piece.
        let idx = self.segments.partition_point(|s| s.hi < u).min(
            self.segments.len().saturating_sub(1),
        );
        Ok(self.segments.get(idx).map_or(0.0, |s| s.eval(u, self.sigma)))
    }

    /// Atom plus the analytic integral of every segment.
    pub fn total_mass(&self) -> f64 {
        if self.dirac_at.is_some() {
            return 1.0;
        }
        self.atom + self.segments.iter().map(|s| s.mass(self.sigma)).sum::<f64>()
    }
}

/// Free-function form of [`MixedDensity::evaluate`].
pub fn evaluate_mixed_density(d: &MixedDensity, u: f64) -> Result<f64> {
    d.evaluate(u)
}

/// First-exit-time distribution: for each `n >= 1` a partition of `[0, h)`
/// into exponential-polynomial pieces (left-closed, right-open) whose
/// `const_term` carries the flat coefficient.
#[derive(Debug, Clone, Serialize)]
pub struct FetDistribution {
    pub cfg: ProcessConfig,
    pub h: f64,
    pub regime: FetRegime,
    /// `pieces_by_n[k]` describes `P(k+1 | .)`.
    pub pieces_by_n: Vec<Vec<ExpPolySegment>>,
}

impl FetDistribution {
    /// Largest `n` tabulated.
    pub fn n_max(&self) -> u32 {
        self.pieces_by_n.len() as u32
    }

    /// `P(n | x)` for `1 <= n <= n_max`, `x` in `[0, h)`.
    pub fn pmf(&self, n: u32, x: f64) -> Result<f64> {
        if n == 0 || n > self.n_max() {
            return Err(Error::Domain(format!(
                "exit-time pmf tabulated for 1..={}, asked n={n}",
                self.n_max()
            )));
        }
        let tol = self.cfg.snap_tol();
        if !(x >= -tol && x < self.h + tol) || x >= self.h {
            return Err(Error::Domain(format!(
                "exit-time pmf needs x in [0, h), got x={x}, h={}",
                self.h
            )));
        }
        let pieces = &self.pieces_by_n[(n - 1) as usize];
        // Left-closed/right-open membership.
        let idx = pieces.partition_point(|s| s.hi <= x).min(pieces.len() - 1);
        Ok(pieces[idx].eval(x, self.cfg.params.sigma))
    }
}
