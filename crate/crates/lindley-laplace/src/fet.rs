//! Closed-form first-exit-time law `P(n|x)` of the process from `[0, h]`.
//!
//! Conditioning on the position reached at time 1 maps `P(n|.)` to
//! `P(n+1|.)` through the same Laplace kernel as the position recursion,
//! restricted to `[0, h]` and augmented by the reflected mass at 0:
//!
//! ```text
//! P(n+1|x) = m0(x) P(n|0) + 1/(2 sigma) [ e^{-(x+mu)/sigma} int_0^{y*} e^{y/sigma} P(n|y) dy
//!                                        + e^{(x+mu)/sigma} int_{y*}^{h} e^{-y/sigma} P(n|y) dy ],
//! ```
//!
//! with the kink at `y* = clamp(x+mu, 0, h)` and `m0` the stick-at-zero
//! branch of the kernel. Pieces carry a flat `eta` term besides the two
//! exponentials; its kink contributions telescope so `eta` passes through
//! unchanged to the piece the kink lands in. Partitions depend on the
//! regime: knots march down from `h` in steps of `mu` for positive drift,
//! up from 0 in steps of `-mu` for negative drift, and the single-piece
//! corollary regimes reduce to two-term scalar recursions.

use crate::kernel;
use crate::model::{
    dispatch_fet_regime, ExpPolySegment, FetDistribution, FetRegime, ProcessConfig,
};
use crate::{Error, Result};

/// One step of the exit-time recursion for the piecewise regimes.
#[derive(Debug, Clone)]
pub struct FetRecursionState {
    pub cfg: ProcessConfig,
    pub n: u32,
    pub regime: FetRegime,
    /// Partition of `[0, h)`; `const_term` holds the flat coefficient.
    pub pieces: Vec<ExpPolySegment>,
}

/// `P(n|.)` as a piecewise closed form, evaluable at any `x in [0, h)`.
#[derive(Debug, Clone)]
pub struct FetPmf {
    pub cfg: ProcessConfig,
    pub n: u32,
    pub pieces: Vec<ExpPolySegment>,
}

impl FetPmf {
    pub fn eval(&self, x: f64) -> Result<f64> {
        let h = self.cfg.h.unwrap();
        if !(x >= 0.0 && x < h) {
            return Err(Error::Domain(format!(
                "exit pmf needs x in [0, h), got x={x}, h={h}"
            )));
        }
        let idx = self
            .pieces
            .partition_point(|s| s.hi <= x)
            .min(self.pieces.len() - 1);
        Ok(self.pieces[idx].eval(x, self.cfg.params.sigma))
    }
}

/// Mean exit time with the geometric-tail truncation diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct FetMean {
    pub mean: f64,
    /// Upper bound on the truncated tail's contribution.
    pub tail_bound: f64,
    /// Terms actually summed.
    pub n_terms: u32,
    /// Estimated geometric decay ratio of the pmf tail.
    pub decay_ratio: f64,
}

// ---------------------------------------------------------------------------
// working representation
// ---------------------------------------------------------------------------

#[derive(Clone)]
struct FPiece {
    lo: f64,
    hi: f64,
    a: Vec<f64>,
    b: Vec<f64>,
    c0: f64,
}

struct FetWorkspace {
    pieces: Vec<FPiece>,
    shift: f64,
    scale: f64,
}

fn fet_workspace(pieces: &[ExpPolySegment]) -> FetWorkspace {
    let scale = pieces
        .iter()
        .map(|s| s.log_scale)
        .fold(f64::NEG_INFINITY, f64::max);
    let shift = pieces[0].shift;
    let work = pieces
        .iter()
        .map(|s| {
            debug_assert_eq!(s.shift, shift);
            let w = (s.log_scale - scale).exp();
            FPiece {
                lo: s.lo,
                hi: s.hi,
                a: s.a.iter().map(|c| c * w).collect(),
                b: s.b.iter().map(|c| c * w).collect(),
                c0: s.const_term * w,
            }
        })
        .collect();
    FetWorkspace {
        pieces: work,
        shift,
        scale,
    }
}

fn trim_trailing_zeros(v: &mut Vec<f64>) {
    while v.last() == Some(&0.0) {
        v.pop();
    }
}

/// Drop trailing polynomial coefficients whose largest possible
/// contribution over the domain is more than 60 decimal orders below the
/// piece's leading contribution. Keeps the degree bounded along deep
/// recursions without touching anything a f64 evaluation could see.
fn trim_negligible(v: &mut Vec<f64>, t_max: f64) {
    if v.len() <= 1 {
        return;
    }
    let mut env = 0.0_f64;
    let mut pw = 1.0;
    for &c in v.iter() {
        env = env.max(c.abs() * pw);
        pw *= t_max;
    }
    if env == 0.0 {
        return;
    }
    while v.len() > 1 {
        let j = v.len() - 1;
        if v[j].abs() * t_max.powi(j as i32) < 1e-60 * env {
            v.pop();
        } else {
            break;
        }
    }
}

/// Apply one conditioning step on the target partition. Each target's kink
/// image `(lo+mu, hi+mu)` must either leave `[0, h]` entirely (the
/// one-sided cases) or stay inside a single source piece.
fn assemble_fet_step(
    ws: &FetWorkspace,
    cfg: &ProcessConfig,
    targets: &[(f64, f64)],
    tol: f64,
) -> Vec<FPiece> {
    let (mu, sigma) = (cfg.params.mu, cfg.params.sigma);
    let h = cfg.h.unwrap();
    let lam = 2.0 / sigma;
    let pref_plus = (mu / sigma).exp() / (2.0 * sigma);
    let pref_minus = (-mu / sigma).exp() / (2.0 * sigma);

    // value of P(n|.) at 0, at working scale
    let p0 = {
        let f = &ws.pieces[0];
        kernel::horner(&f.a, -ws.shift) + kernel::horner(&f.b, -ws.shift) + f.c0
    };

    // whole-piece integrals against either kernel side
    let right_full: Vec<f64> = ws
        .pieces
        .iter()
        .map(|p| {
            kernel::poly_int(&p.a, ws.shift, p.lo, p.hi)
                + kernel::exp_poly_int(&p.b, ws.shift, -lam, p.lo, p.hi)
                + p.c0 * sigma * ((-p.lo / sigma).exp() - (-p.hi / sigma).exp())
        })
        .collect();
    let left_full: Vec<f64> = ws
        .pieces
        .iter()
        .map(|p| {
            kernel::exp_poly_int(&p.a, ws.shift, lam, p.lo, p.hi)
                + kernel::poly_int(&p.b, ws.shift, p.lo, p.hi)
                + p.c0 * sigma * ((p.hi / sigma).exp() - (p.lo / sigma).exp())
        })
        .collect();
    let mut right_suffix = vec![0.0; ws.pieces.len() + 1];
    for j in (0..ws.pieces.len()).rev() {
        right_suffix[j] = right_suffix[j + 1] + right_full[j];
    }
    let mut left_prefix = vec![0.0; ws.pieces.len() + 1];
    for j in 0..ws.pieces.len() {
        left_prefix[j + 1] = left_prefix[j] + left_full[j];
    }

    let locate = |y: f64| -> usize {
        ws.pieces
            .partition_point(|p| p.hi <= y)
            .min(ws.pieces.len() - 1)
    };

    let mut out = Vec::with_capacity(targets.len());
    for &(lo, hi) in targets {
        // Reflected case: every start in this piece lands below 0 after one
        // mean step, so the kernel is one-sided and the stick probability
        // carries the flat term through.
        if hi + mu <= tol {
            let a0 = pref_plus * (right_suffix[0] - sigma * p0);
            out.push(FPiece {
                lo,
                hi,
                a: vec![a0],
                b: vec![],
                c0: p0,
            });
            continue;
        }
        // Absorbed case: the kink sits at or beyond h for the whole piece.
        if lo + mu >= h - tol {
            let b0 = pref_minus * (left_prefix[ws.pieces.len()] + sigma * p0);
            out.push(FPiece {
                lo,
                hi,
                a: vec![],
                b: vec![b0],
                c0: 0.0,
            });
            continue;
        }

        let mid = 0.5 * (lo + hi);
        let p = locate((mid + mu).min(h - tol));
        let src = &ws.pieces[p];
        assert!(
            lo + mu >= src.lo - tol && hi + mu <= src.hi + tol,
            "target ({lo}, {hi}) + mu strays outside source piece ({}, {})",
            src.lo,
            src.hi
        );
        debug_assert!(lo + mu >= -tol, "piece straddles the reflection point");

        let gp = kernel::antideriv_poly_part(&src.a, lam);
        let gm = kernel::antideriv_poly_part(&src.b, -lam);

        let mut a_new = vec![0.0; src.a.len() + 1];
        let mut b_new = vec![0.0; src.b.len() + 1];
        // rising side: evaluations of the left antiderivative at the kink
        for (r, &g) in gp.iter().enumerate() {
            a_new[r] += g;
        }
        for (k, &c) in src.a.iter().enumerate() {
            a_new[k + 1] -= c / (k + 1) as f64;
        }
        // falling side: evaluations of the right antiderivative at the kink
        for (r, &g) in gm.iter().enumerate() {
            b_new[r] -= g;
        }
        for (k, &c) in src.b.iter().enumerate() {
            b_new[k + 1] += c / (k + 1) as f64;
        }

        // constants from the fixed endpoints of the kink piece and from the
        // whole pieces on either side
        let f_right_hi = kernel::poly_prim_at(&src.a, ws.shift, src.hi)
            + kernel::exp_prim_at(&gm, -lam, ws.shift, src.hi)
            - src.c0 * sigma * (-src.hi / sigma).exp();
        let f_left_lo = kernel::exp_prim_at(&gp, lam, ws.shift, src.lo)
            + kernel::poly_prim_at(&src.b, ws.shift, src.lo)
            + src.c0 * sigma * (src.lo / sigma).exp();
        a_new[0] += right_suffix[p + 1] + f_right_hi;
        b_new[0] += left_prefix[p] - f_left_lo + sigma * p0;

        for c in a_new.iter_mut() {
            *c *= pref_plus;
        }
        for c in b_new.iter_mut() {
            *c *= pref_minus;
        }
        trim_trailing_zeros(&mut a_new);
        trim_trailing_zeros(&mut b_new);
        out.push(FPiece {
            lo,
            hi,
            a: a_new,
            b: b_new,
            c0: src.c0,
        });
    }
    out
}

fn finish_fet_step(
    state: &FetRecursionState,
    pieces: Vec<FPiece>,
    natural_shift: f64,
    ws_scale: f64,
) -> FetRecursionState {
    let n = state.n + 1;
    // Re-center every piece to the fixed basis t = x. The paper-style
    // basis drifts with n while the domain stays [0, h); evaluating huge
    // offsets against near-cancelling coefficients is exponentially
    // unstable in deep recursions, whereas the per-step re-centering
    // offset is only |mu|.
    let segments = pieces
        .into_iter()
        .map(|p| {
            let mut seg = ExpPolySegment {
                lo: p.lo,
                hi: p.hi,
                shift: 0.0,
                a: kernel::recenter_poly(&p.a, -natural_shift),
                b: kernel::recenter_poly(&p.b, -natural_shift),
                const_term: p.c0,
                log_scale: ws_scale,
            };
            seg.renormalize();
            let t_max = seg.lo.abs().max(seg.hi.abs());
            trim_negligible(&mut seg.a, t_max);
            trim_negligible(&mut seg.b, t_max);
            seg
        })
        .collect();
    FetRecursionState {
        cfg: state.cfg,
        n,
        regime: state.regime,
        pieces: segments,
    }
}

fn check_regime(state: &FetRecursionState, want: FetRegime) -> Result<()> {
    if state.regime != want {
        return Err(Error::RegimeMismatch {
            expected: want.label().into(),
            got: state.regime.label().into(),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// partitions and seeds
// ---------------------------------------------------------------------------

/// Piece count cap for positive drift: least `r` with `r mu >= h`, ties
/// counted (snap tolerance).
fn pieces_cap_pos(mu: f64, h: f64, tol: f64) -> u32 {
    let mut r = (h / mu).ceil().max(1.0) as u32;
    while r > 1 && ((r - 1) as f64 * mu >= h - tol) {
        r -= 1;
    }
    r
}

/// Piece count cap for negative drift: least `r` with `r (-mu) > h`,
/// strictly (snap tolerance).
fn pieces_cap_neg(mu: f64, h: f64, tol: f64) -> u32 {
    let mut r = 1u32;
    while (r as f64) * (-mu) <= h + tol {
        r += 1;
    }
    r
}

fn partition_pos(cfg: &ProcessConfig, ell: u32) -> Vec<(f64, f64)> {
    let h = cfg.h.unwrap();
    let mu = cfg.params.mu;
    let tol = cfg.snap_tol();
    let mut knots = vec![0.0];
    for k in (0..ell).rev() {
        knots.push(h - k as f64 * mu);
    }
    let mut out = Vec::new();
    for w in knots.windows(2) {
        if w[1] - w[0] > tol {
            out.push((w[0], w[1].min(h)));
        }
    }
    out
}

fn partition_neg(cfg: &ProcessConfig, hn: u32) -> Vec<(f64, f64)> {
    let h = cfg.h.unwrap();
    let mu = cfg.params.mu;
    let tol = cfg.snap_tol();
    let mut knots = vec![0.0];
    for i in 1..hn {
        knots.push(-(i as f64) * mu);
    }
    knots.push(h);
    let mut out = Vec::new();
    for w in knots.windows(2) {
        if w[1] - w[0] > tol {
            out.push((w[0], w[1]));
        }
    }
    out
}

/// `P(1|x) = 1 - F_1(h|x)` laid out on the regime's step-1 partition.
pub fn fet_seed(cfg: &ProcessConfig) -> Result<FetRecursionState> {
    let regime = dispatch_fet_regime(cfg)?;
    let h = cfg.h.unwrap();
    let (mu, sigma) = (cfg.params.mu, cfg.params.sigma);
    let pieces = match regime {
        FetRegime::MuPosLtH => {
            // rising piece on [0, h-mu), saturated piece on [h-mu, h);
            // degree-0 seeds, kept in the fixed basis t = x
            vec![
                ExpPolySegment {
                    lo: 0.0,
                    hi: h - mu,
                    shift: 0.0,
                    a: vec![0.5 * ((mu - h) / sigma).exp()],
                    b: vec![],
                    const_term: 0.0,
                    log_scale: 0.0,
                },
                ExpPolySegment {
                    lo: h - mu,
                    hi: h,
                    shift: 0.0,
                    a: vec![],
                    b: vec![-0.5 * ((h - mu) / sigma).exp()],
                    const_term: 1.0,
                    log_scale: 0.0,
                },
            ]
        }
        FetRegime::MuNeg => vec![ExpPolySegment {
            lo: 0.0,
            hi: h,
            shift: 0.0,
            a: vec![0.5 * ((mu - h) / sigma).exp()],
            b: vec![],
            const_term: 0.0,
            log_scale: 0.0,
        }],
        FetRegime::MuZero => vec![ExpPolySegment {
            lo: 0.0,
            hi: h,
            shift: 0.0,
            a: vec![0.5 * (-h / sigma).exp()],
            b: vec![],
            const_term: 0.0,
            log_scale: 0.0,
        }],
        FetRegime::MuPosGeH | FetRegime::MuNegGeH => {
            return Err(Error::RegimeMismatch {
                expected: "a piecewise exit regime".into(),
                got: regime.label().into(),
            })
        }
    };
    let mut pieces = pieces;
    for p in pieces.iter_mut() {
        p.renormalize();
    }
    Ok(FetRecursionState {
        cfg: *cfg,
        n: 1,
        regime,
        pieces,
    })
}

// ---------------------------------------------------------------------------
// per-regime steppers
// ---------------------------------------------------------------------------

/// Advance one step under `0 < mu < h`: the knots march down from `h` in
/// steps of `mu` until the piece count saturates; the top piece sees no
/// kink and degenerates to a single falling exponential.
pub fn step_fet_mu_pos(state: &FetRecursionState) -> Result<FetRecursionState> {
    check_regime(state, FetRegime::MuPosLtH)?;
    let cfg = &state.cfg;
    let tol = cfg.snap_tol();
    let cap = pieces_cap_pos(cfg.params.mu, cfg.h.unwrap(), tol);
    let ell = (state.n + 2).min(cap);
    let targets = partition_pos(cfg, ell);
    let ws = fet_workspace(&state.pieces);
    let pieces = assemble_fet_step(&ws, cfg, &targets, tol);
    Ok(finish_fet_step(state, pieces, ws.shift - cfg.params.mu, ws.scale))
}

/// Advance one step under `mu < 0`, `-mu < h`: knots march up
/// from 0 in steps of `-mu`; starts below `-mu` reflect with positive
/// probability, which feeds the flat term of piece 1.
pub fn step_fet_mu_neg(state: &FetRecursionState) -> Result<FetRecursionState> {
    check_regime(state, FetRegime::MuNeg)?;
    let cfg = &state.cfg;
    let tol = cfg.snap_tol();
    let cap = pieces_cap_neg(cfg.params.mu, cfg.h.unwrap(), tol);
    let hn = (state.n + 1).min(cap);
    let targets = partition_neg(cfg, hn);
    let ws = fet_workspace(&state.pieces);
    let pieces = assemble_fet_step(&ws, cfg, &targets, tol);
    Ok(finish_fet_step(state, pieces, ws.shift - cfg.params.mu, ws.scale))
}

/// Advance one step under `mu = 0`: a single piece whose falling-side
/// polynomial stays one degree shorter than the rising side.
pub fn step_fet_mu_zero(state: &FetRecursionState) -> Result<FetRecursionState> {
    check_regime(state, FetRegime::MuZero)?;
    let cfg = &state.cfg;
    let tol = cfg.snap_tol();
    let targets = [(0.0, cfg.h.unwrap())];
    let ws = fet_workspace(&state.pieces);
    let pieces = assemble_fet_step(&ws, cfg, &targets, tol);
    Ok(finish_fet_step(state, pieces, ws.shift, ws.scale))
}

// ---------------------------------------------------------------------------
// single-piece corollary regimes
// ---------------------------------------------------------------------------

/// `P(n|x) = eta_n + beta_n e^{-x/sigma}` when `0 < h <= mu`:
/// `eta_n = [n=1]`, `beta_1 = -e^{(h-mu)/sigma}/2`, and for `n >= 2`
/// a closed geometric form in `q = 1/2 + h/(2 sigma)`.
pub fn fet_mu_pos_high(cfg: &ProcessConfig, n: u32) -> Result<(f64, f64)> {
    if dispatch_fet_regime(cfg)? != FetRegime::MuPosGeH {
        return Err(Error::RegimeMismatch {
            expected: FetRegime::MuPosGeH.label().into(),
            got: dispatch_fet_regime(cfg)?.label().into(),
        });
    }
    let h = cfg.h.unwrap();
    let (mu, sigma) = (cfg.params.mu, cfg.params.sigma);
    if n == 1 {
        return Ok((1.0, -0.5 * ((h - mu) / sigma).exp()));
    }
    let q = 0.5 + 0.5 * h / sigma;
    // beta_n = e^{(h-(n-1)mu)/sigma}/2 q^{n-2} (1 - q e^{-mu/sigma}), in logs
    let ln_lead = (h - (n - 1) as f64 * mu) / sigma - std::f64::consts::LN_2
        + (n - 2) as f64 * q.ln();
    let beta = ln_lead.exp() * (1.0 - q * (-mu / sigma).exp());
    Ok((0.0, beta))
}

/// `P(n|x) = eta_n + alpha_n e^{x/sigma}` when `0 < h <= -mu`:
/// `alpha_{n+1} = e^{mu/sigma}/2 (h/sigma - 1) alpha_n - e^{(mu-h)/sigma}/2 eta_n`,
/// `eta_{n+1} = alpha_n + eta_n`, seeded by `alpha_1 = e^{(mu-h)/sigma}/2`.
pub fn fet_mu_neg_high(cfg: &ProcessConfig, n: u32) -> Result<(f64, f64)> {
    if dispatch_fet_regime(cfg)? != FetRegime::MuNegGeH {
        return Err(Error::RegimeMismatch {
            expected: FetRegime::MuNegGeH.label().into(),
            got: dispatch_fet_regime(cfg)?.label().into(),
        });
    }
    let h = cfg.h.unwrap();
    let (mu, sigma) = (cfg.params.mu, cfg.params.sigma);
    let q = 0.5 * (mu / sigma).exp() * (h / sigma - 1.0);
    let c = 0.5 * ((mu - h) / sigma).exp();
    let mut alpha = c;
    let mut eta = 0.0;
    for _ in 1..n {
        let a_next = q * alpha - c * eta;
        eta += alpha;
        alpha = a_next;
    }
    Ok((eta, alpha))
}

// ---------------------------------------------------------------------------
// the pmf table and its functionals
// ---------------------------------------------------------------------------

enum Engine {
    Stepper(FetRecursionState),
    PosHigh,
    NegHigh { alpha: f64, eta: f64 },
}

/// Streaming generator of `P(n|.)` pieces in increasing `n`.
struct FetRows {
    cfg: ProcessConfig,
    regime: FetRegime,
    n: u32,
    engine: Engine,
}

impl FetRows {
    fn new(cfg: &ProcessConfig) -> Result<Self> {
        let regime = dispatch_fet_regime(cfg)?;
        let engine = match regime {
            FetRegime::MuPosGeH => Engine::PosHigh,
            FetRegime::MuNegGeH => {
                let h = cfg.h.unwrap();
                Engine::NegHigh {
                    alpha: 0.5 * ((cfg.params.mu - h) / cfg.params.sigma).exp(),
                    eta: 0.0,
                }
            }
            _ => Engine::Stepper(fet_seed(cfg)?),
        };
        Ok(FetRows {
            cfg: *cfg,
            regime,
            n: 0,
            engine,
        })
    }

    /// Pieces of `P(n|.)` for the next `n`.
    fn next_row(&mut self) -> Result<Vec<ExpPolySegment>> {
        self.n += 1;
        let h = self.cfg.h.unwrap();
        match &mut self.engine {
            Engine::Stepper(state) => {
                if self.n > 1 {
                    *state = match self.regime {
                        FetRegime::MuPosLtH => step_fet_mu_pos(state)?,
                        FetRegime::MuNeg => step_fet_mu_neg(state)?,
                        FetRegime::MuZero => step_fet_mu_zero(state)?,
                        _ => unreachable!(),
                    };
                }
                Ok(state.pieces.clone())
            }
            Engine::PosHigh => {
                let (eta, beta) = fet_mu_pos_high(&self.cfg, self.n)?;
                let mut seg = ExpPolySegment {
                    lo: 0.0,
                    hi: h,
                    shift: 0.0,
                    a: vec![],
                    b: vec![beta],
                    const_term: eta,
                    log_scale: 0.0,
                };
                seg.renormalize();
                Ok(vec![seg])
            }
            Engine::NegHigh { alpha, eta } => {
                let (mu, sigma) = (self.cfg.params.mu, self.cfg.params.sigma);
                let q = 0.5 * (mu / sigma).exp() * (h / sigma - 1.0);
                let c = 0.5 * ((mu - h) / sigma).exp();
                if self.n > 1 {
                    let a_next = q * *alpha - c * *eta;
                    *eta += *alpha;
                    *alpha = a_next;
                }
                let mut seg = ExpPolySegment {
                    lo: 0.0,
                    hi: h,
                    shift: 0.0,
                    a: vec![*alpha],
                    b: vec![],
                    const_term: *eta,
                    log_scale: 0.0,
                };
                seg.renormalize();
                Ok(vec![seg])
            }
        }
    }
}

/// Tabulate `P(n|.)` for `n = 1..=n_max`; the table is the cache every
/// downstream consumer (cdf, mean, CLI) reuses.
pub fn fet_table(cfg: &ProcessConfig, n_max: u32) -> Result<FetDistribution> {
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be >= 1".into()));
    }
    let mut rows = FetRows::new(cfg)?;
    let mut pieces_by_n = Vec::with_capacity(n_max as usize);
    for _ in 0..n_max {
        pieces_by_n.push(rows.next_row()?);
    }
    Ok(FetDistribution {
        cfg: *cfg,
        h: cfg.h.unwrap(),
        regime: rows.regime,
        pieces_by_n,
    })
}

/// The piecewise representation of `P(n|.)` alone.
pub fn fet_pmf(cfg: &ProcessConfig, n: u32) -> Result<FetPmf> {
    if n == 0 {
        return Err(Error::InvalidParameter("exit time index starts at 1".into()));
    }
    let mut rows = FetRows::new(cfg)?;
    let mut pieces = rows.next_row()?;
    for _ in 1..n {
        pieces = rows.next_row()?;
    }
    Ok(FetPmf {
        cfg: *cfg,
        n,
        pieces,
    })
}

/// Partial sums `sum_{k<=n} P(k|x)` for `n = 1..=n_max`.
pub fn fet_cdf(cfg: &ProcessConfig, x: f64, n_max: u32) -> Result<Vec<f64>> {
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be >= 1".into()));
    }
    let table = fet_table(cfg, n_max)?;
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        acc += table.pmf(n, x)?;
        out.push(acc);
    }
    Ok(out)
}

/// `E[N_x] = sum n P(n|x)`, truncated once a fitted geometric tail bound
/// contributes less than `rel_tol` relatively. Fails rather than silently
/// truncating when no convergent ratio emerges within the step cap.
pub fn mean_fet(cfg: &ProcessConfig, rel_tol: f64) -> Result<FetMean> {
    if rel_tol.is_nan() || rel_tol <= 0.0 {
        return Err(Error::InvalidParameter("rel_tol must be positive".into()));
    }
    const N_CAP: u32 = 10_000;
    const LOOKBACK: u32 = 10;
    let x = cfg.x;
    let mut rows = FetRows::new(cfg)?;
    let sigma = cfg.params.sigma;
    let eval = |pieces: &[ExpPolySegment], x: f64| -> f64 {
        let idx = pieces.partition_point(|s| s.hi <= x).min(pieces.len() - 1);
        pieces[idx].eval(x, sigma)
    };

    let mut mean = 0.0;
    let mut window = std::collections::VecDeque::with_capacity(LOOKBACK as usize + 1);
    for n in 1..=N_CAP {
        let pieces = rows.next_row()?;
        let p = eval(&pieces, x);
        mean += n as f64 * p;
        window.push_back(p);
        if window.len() > LOOKBACK as usize + 1 {
            window.pop_front();
        }
        if n >= 2 * LOOKBACK && window.len() == LOOKBACK as usize + 1 {
            let newest = *window.back().unwrap();
            let oldest = *window.front().unwrap();
            if newest > 0.0 && oldest > 0.0 && newest < oldest {
                let ratio = (newest / oldest).powf(1.0 / LOOKBACK as f64);
                if ratio < 0.999_999 {
                    // sum_{k>n} k p_k <= p_n * (n r/(1-r) + r/(1-r)^2)
                    let r = ratio;
                    let bound = newest * (n as f64 * r / (1.0 - r) + r / ((1.0 - r) * (1.0 - r)));
                    if bound < rel_tol * mean.max(f64::MIN_POSITIVE) {
                        return Ok(FetMean {
                            mean,
                            tail_bound: bound,
                            n_terms: n,
                            decay_ratio: r,
                        });
                    }
                }
            }
        }
    }
    Err(Error::Numeric(format!(
        "exit-time mean: no convergent geometric tail within {N_CAP} terms"
    )))
}
