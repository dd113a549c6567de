//! Closed-form law of the position `W_n`, built step by step.
//!
//! One convolution step with the Laplace kernel maps a piecewise
//! exponential-polynomial density (plus atom) to another one: splitting the
//! kernel at its kink `y = u - mu` turns every integral into the closed
//! forms of [`crate::kernel`], and collecting powers of `t = u - shift`
//! gives the coefficient recursion for the next step. The three drift
//! regimes differ only in how the partition of `(0, inf)` evolves:
//!
//! * `mu >= 0`: interior knots at `i*mu` plus a travelling knot `n*mu + x`;
//!   piece `i` has polynomial degree `min(n, i) - 1`.
//! * `-x < mu < 0`: two pieces split at `n*mu + x`, which drifts into 0 and
//!   dies after finitely many steps (the sub-case switch below).
//! * `mu <= -x`: a single decaying piece from the first step on, with the
//!   polynomial shift lagging one step behind (`(n-1)*mu`).

use crate::kernel;
use crate::model::{
    dispatch_position_regime, ExpPolySegment, LaplaceParams, MixedDensity, PositionRegime,
    ProcessConfig,
};
use crate::{Error, Result};

/// Sub-case of the `-x < mu < 0` recursion: piece 1 exists iff `x + n*mu > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PieceOneStatus {
    Alive,
    Dead,
}

/// One step of the position recursion, ready to be advanced.
#[derive(Debug, Clone)]
pub struct PositionRecursionState {
    pub cfg: ProcessConfig,
    pub n: u32,
    pub regime: PositionRegime,
    pub subcase: PieceOneStatus,
    pub density: MixedDensity,
}

impl PositionRecursionState {
    fn piece_one_status(cfg: &ProcessConfig, n: u32) -> PieceOneStatus {
        if cfg.x + n as f64 * cfg.params.mu > cfg.snap_tol() {
            PieceOneStatus::Alive
        } else {
            PieceOneStatus::Dead
        }
    }
}

/// The law of `W_1` (the recursion seed), split at the knot `x + mu` when
/// the start lies above the kernel kink and a single decaying piece
/// otherwise.
pub fn one_step_law(cfg: &ProcessConfig) -> MixedDensity {
    let (mu, sigma) = (cfg.params.mu, cfg.params.sigma);
    let x = cfg.x;
    let regime = dispatch_position_regime(cfg);
    let tol = cfg.snap_tol();
    let ln2s = (2.0 * sigma).ln();

    // Under nonnegative drift the polynomial shift marches with n (the
    // knots march along with it, keeping the basis balanced); under
    // negative drift the domain does not march, so pieces are kept in the
    // fixed basis t = u and every step re-centers (see finish_step).
    let seed_shift = if regime == PositionRegime::MuNonNeg { mu } else { 0.0 };
    let mut segments = Vec::new();
    let atom;
    if x > -mu {
        atom = 0.5 * (-(x + mu) / sigma).exp();
        // rising piece (0, x+mu], falling piece (x+mu, inf)
        if x + mu > tol {
            segments.push(ExpPolySegment {
                lo: 0.0,
                hi: x + mu,
                shift: seed_shift,
                a: vec![1.0],
                b: vec![],
                const_term: 0.0,
                log_scale: -(x + mu) / sigma - ln2s,
            });
        }
        segments.push(ExpPolySegment {
            lo: x + mu,
            hi: f64::INFINITY,
            shift: seed_shift,
            a: vec![],
            b: vec![1.0],
            const_term: 0.0,
            log_scale: (x + mu) / sigma - ln2s,
        });
    } else {
        atom = 1.0 - 0.5 * ((x + mu) / sigma).exp();
        // single falling piece; the shift convention lags one step here
        segments.push(ExpPolySegment {
            lo: 0.0,
            hi: f64::INFINITY,
            shift: 0.0,
            a: vec![],
            b: vec![1.0],
            const_term: 0.0,
            log_scale: (x + mu) / sigma - ln2s,
        });
    }
    MixedDensity {
        n: 1,
        atom,
        segments,
        regime,
        sigma,
        dirac_at: None,
    }
}

// ---------------------------------------------------------------------------
// shared step machinery
// ---------------------------------------------------------------------------

#[derive(Clone)]
struct Piece {
    lo: f64,
    hi: f64,
    a: Vec<f64>,
    b: Vec<f64>,
}

struct Workspace {
    pieces: Vec<Piece>,
    shift: f64,
    scale: f64,
    atom_eff: f64,
}

fn workspace_from(d: &MixedDensity) -> Workspace {
    let mut scale = d
        .segments
        .iter()
        .map(|s| s.log_scale)
        .fold(f64::NEG_INFINITY, f64::max);
    if d.atom > 0.0 {
        scale = scale.max(d.atom.ln());
    }
    let shift = d.segments[0].shift;
    let pieces = d
        .segments
        .iter()
        .map(|s| {
            debug_assert_eq!(s.shift, shift, "pieces of one step share the shift");
            let w = (s.log_scale - scale).exp();
            Piece {
                lo: s.lo,
                hi: s.hi,
                a: s.a.iter().map(|c| c * w).collect(),
                b: s.b.iter().map(|c| c * w).collect(),
            }
        })
        .collect();
    let atom_eff = if d.atom > 0.0 { (d.atom.ln() - scale).exp() } else { 0.0 };
    Workspace {
        pieces,
        shift,
        scale,
        atom_eff,
    }
}

fn trim_trailing_zeros(v: &mut Vec<f64>) {
    while v.last() == Some(&0.0) {
        v.pop();
    }
}

/// Apply one kernel-convolution step to `ws`, producing segments on the
/// target partition. `targets` must be ordered, non-empty intervals; the
/// image of each target under `u -> u - mu` must stay inside one source
/// piece (asserted), which is how the recursions' interval bookkeeping
/// guarantees the collected powers are exact.
fn assemble_step(ws: &Workspace, params: &LaplaceParams, targets: &[(f64, f64)], tol: f64) -> Vec<Piece> {
    let (mu, sigma) = (params.mu, params.sigma);
    let lam = 2.0 / sigma;
    let pref_plus = (-mu / sigma).exp() / (2.0 * sigma);
    let pref_minus = (mu / sigma).exp() / (2.0 * sigma);

    // Whole-piece integrals against either kernel side, then directional
    // partial sums over the source index.
    let plus_full: Vec<f64> = ws
        .pieces
        .iter()
        .map(|p| {
            kernel::poly_int(&p.a, ws.shift, p.lo, p.hi)
                + kernel::exp_poly_int(&p.b, ws.shift, -lam, p.lo, p.hi)
        })
        .collect();
    let minus_full: Vec<f64> = ws
        .pieces
        .iter()
        .map(|p| {
            if p.hi.is_infinite() {
                // the last piece never sits left of a kink; its rising-side
                // integral is never consumed
                0.0
            } else {
                kernel::exp_poly_int(&p.a, ws.shift, lam, p.lo, p.hi)
                    + kernel::poly_int(&p.b, ws.shift, p.lo, p.hi)
            }
        })
        .collect();
    let mut plus_suffix = vec![0.0; ws.pieces.len() + 1];
    for j in (0..ws.pieces.len()).rev() {
        plus_suffix[j] = plus_suffix[j + 1] + plus_full[j];
    }
    let mut minus_prefix = vec![0.0; ws.pieces.len() + 1];
    for j in 0..ws.pieces.len() {
        minus_prefix[j + 1] = minus_prefix[j] + minus_full[j];
    }

    let locate = |y: f64| -> usize {
        ws.pieces
            .partition_point(|p| p.hi < y)
            .min(ws.pieces.len() - 1)
    };

    let mut out = Vec::with_capacity(targets.len());
    for &(lo, hi) in targets {
        let atom_plus = hi <= mu + tol;
        // A target entirely below the kernel kink sees every source piece on
        // the rising side; no kink terms arise.
        if hi - mu <= ws.pieces[0].lo + tol {
            let mut a0 = plus_suffix[0];
            if atom_plus {
                a0 += ws.atom_eff;
            }
            let mut a = vec![pref_plus * a0];
            trim_trailing_zeros(&mut a);
            out.push(Piece { lo, hi, a, b: vec![] });
            continue;
        }

        let mid = if hi.is_finite() { 0.5 * (lo + hi) } else { lo + 1.0 };
        let p = locate(mid - mu);
        let src = &ws.pieces[p];
        debug_assert!(
            lo - mu >= src.lo - tol && (hi.is_infinite() || hi - mu <= src.hi + tol),
            "target ({lo}, {hi}) - mu strays outside source piece ({}, {})",
            src.lo,
            src.hi
        );

        let gp = kernel::antideriv_poly_part(&src.a, lam);
        let gm = kernel::antideriv_poly_part(&src.b, -lam);

        let mut a_new = vec![0.0; src.a.len() + 1];
        let mut b_new = vec![0.0; src.b.len() + 1];
        for (r, &g) in gp.iter().enumerate() {
            a_new[r] += g;
        }
        for (k, &c) in src.a.iter().enumerate() {
            a_new[k + 1] -= c / (k + 1) as f64;
        }
        for (r, &g) in gm.iter().enumerate() {
            b_new[r] -= g;
        }
        for (k, &c) in src.b.iter().enumerate() {
            b_new[k + 1] += c / (k + 1) as f64;
        }

        // constants: the far side of the kink piece plus every whole piece
        // beyond it, and the atom on whichever side of its own kink `u = mu`
        // this target lies.
        let f_plus_hi = kernel::poly_prim_at(&src.a, ws.shift, src.hi)
            + kernel::exp_prim_at(&gm, -lam, ws.shift, src.hi);
        let f_minus_lo = kernel::exp_prim_at(&gp, lam, ws.shift, src.lo)
            + kernel::poly_prim_at(&src.b, ws.shift, src.lo);
        a_new[0] += plus_suffix[p + 1] + f_plus_hi;
        b_new[0] += minus_prefix[p] - f_minus_lo;
        if atom_plus {
            a_new[0] += ws.atom_eff;
        } else {
            b_new[0] += ws.atom_eff;
        }

        for c in a_new.iter_mut() {
            *c *= pref_plus;
        }
        for c in b_new.iter_mut() {
            *c *= pref_minus;
        }
        trim_trailing_zeros(&mut a_new);
        trim_trailing_zeros(&mut b_new);
        if hi.is_infinite() {
            assert!(
                a_new.iter().all(|&c| c == 0.0),
                "rising coefficients must vanish identically on the unbounded piece"
            );
            a_new.clear();
        }
        out.push(Piece {
            lo,
            hi,
            a: a_new,
            b: b_new,
        });
    }
    out
}

/// Mass reaching exactly 0 in one step, `int m0(y) f_n(y) dy + m0(0) c_n`,
/// where `m0` is the atom branch of the transition kernel.
fn next_atom(ws: &Workspace, params: &LaplaceParams) -> f64 {
    let (mu, sigma) = (params.mu, params.sigma);
    let lam = 2.0 / sigma;
    let mut acc = kernel::Acc::new();
    if mu >= 0.0 {
        // m0(y) = e^{-(y+mu)/sigma}/2 everywhere
        for p in &ws.pieces {
            acc.add(kernel::poly_int(&p.a, ws.shift, p.lo, p.hi));
            acc.add(kernel::exp_poly_int(&p.b, ws.shift, -lam, p.lo, p.hi));
        }
        acc.add(ws.atom_eff);
        let raw = 0.5 * (-mu / sigma).exp() * acc.value();
        return (ws.scale.exp() * raw).clamp(0.0, 1.0);
    }
    // mu < 0: reflected branch on (0, -mu), exponential branch beyond.
    let knee = -mu;
    let half_up = 0.5 * (mu / sigma).exp();
    let half_dn = 0.5 * (-mu / sigma).exp();
    for p in &ws.pieces {
        let lo1 = p.lo.min(knee);
        let hi1 = p.hi.min(knee);
        if hi1 > lo1 {
            // (1 - e^{(y+mu)/sigma}/2) f(y)
            acc.add(kernel::exp_poly_int(&p.a, ws.shift, 1.0 / sigma, lo1, hi1));
            acc.add(kernel::exp_poly_int(&p.b, ws.shift, -1.0 / sigma, lo1, hi1));
            acc.add(-half_up * kernel::exp_poly_int(&p.a, ws.shift, lam, lo1, hi1));
            acc.add(-half_up * kernel::poly_int(&p.b, ws.shift, lo1, hi1));
        }
        let lo2 = p.lo.max(knee);
        if p.hi > lo2 {
            // e^{-(y+mu)/sigma}/2 f(y)
            acc.add(half_dn * kernel::poly_int(&p.a, ws.shift, lo2, p.hi));
            acc.add(half_dn * kernel::exp_poly_int(&p.b, ws.shift, -lam, lo2, p.hi));
        }
    }
    acc.add((1.0 - half_up) * ws.atom_eff);
    (ws.scale.exp() * acc.value()).clamp(0.0, 1.0)
}

fn finish_step(
    state: &PositionRecursionState,
    pieces: Vec<Piece>,
    atom: f64,
    natural_shift: f64,
    scale: f64,
    recenter: bool,
) -> PositionRecursionState {
    let n = state.n + 1;
    let shift = if recenter { 0.0 } else { natural_shift };
    let segments = pieces
        .into_iter()
        .map(|p| {
            let (a, b) = if recenter {
                (
                    kernel::recenter_poly(&p.a, -natural_shift),
                    kernel::recenter_poly(&p.b, -natural_shift),
                )
            } else {
                (p.a, p.b)
            };
            let mut seg = ExpPolySegment {
                lo: p.lo,
                hi: p.hi,
                shift,
                a,
                b,
                const_term: 0.0,
                log_scale: scale,
            };
            seg.renormalize();
            seg
        })
        .collect();
    PositionRecursionState {
        cfg: state.cfg,
        n,
        regime: state.regime,
        subcase: PositionRecursionState::piece_one_status(&state.cfg, n),
        density: MixedDensity {
            n,
            atom,
            segments,
            regime: state.regime,
            sigma: state.cfg.params.sigma,
            dirac_at: None,
        },
    }
}

fn check_regime(state: &PositionRecursionState, want: PositionRegime) -> Result<()> {
    if state.regime != want {
        return Err(Error::RegimeMismatch {
            expected: want.label().into(),
            got: state.regime.label().into(),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// per-regime steppers
// ---------------------------------------------------------------------------

/// Advance one step under `mu >= 0`: interior knots at multiples of `mu`,
/// travelling knot at `(n+1) mu + x`, the last piece unbounded and purely
/// decaying.
pub fn step_mu_nonneg(state: &PositionRecursionState) -> Result<PositionRecursionState> {
    check_regime(state, PositionRegime::MuNonNeg)?;
    let cfg = &state.cfg;
    let (mu, x) = (cfg.params.mu, cfg.x);
    let n = state.n as f64;
    let tol = cfg.snap_tol();

    let mut knots = Vec::with_capacity(state.n as usize + 3);
    knots.push(0.0);
    for i in 1..=state.n {
        knots.push(i as f64 * mu);
    }
    knots.push((n + 1.0) * mu + x);
    knots.push(f64::INFINITY);
    let mut targets = Vec::new();
    for w in knots.windows(2) {
        if w[1] - w[0] > tol {
            targets.push((w[0], w[1]));
        }
    }

    let ws = workspace_from(&state.density);
    let pieces = assemble_step(&ws, &cfg.params, &targets, tol);
    let atom = next_atom(&ws, &cfg.params);
    Ok(finish_step(state, pieces, atom, ws.shift + mu, ws.scale, false))
}

/// Advance one step under `-x < mu < 0`. The recursion branch is chosen by
/// the sign of `x + n mu` at the *source* step; when the new knot
/// `x + (n+1) mu` is nonpositive, piece 1's interval is empty and only the
/// decaying piece survives.
pub fn step_mu_neg_small(state: &PositionRecursionState) -> Result<PositionRecursionState> {
    check_regime(state, PositionRegime::MuNegSmall)?;
    let cfg = &state.cfg;
    let (mu, x) = (cfg.params.mu, cfg.x);
    let tol = cfg.snap_tol();
    let knot = x + (state.n + 1) as f64 * mu;

    let mut targets = Vec::new();
    if knot > tol {
        targets.push((0.0, knot));
        targets.push((knot, f64::INFINITY));
    } else {
        targets.push((0.0, f64::INFINITY));
    }

    let ws = workspace_from(&state.density);
    let pieces = assemble_step(&ws, &cfg.params, &targets, tol);
    let atom = next_atom(&ws, &cfg.params);
    Ok(finish_step(state, pieces, atom, ws.shift + mu, ws.scale, true))
}

/// Advance one step under `mu <= -x`: a single decaying piece whose
/// polynomial shift lags one step behind the time index.
pub fn step_mu_neg_large(state: &PositionRecursionState) -> Result<PositionRecursionState> {
    check_regime(state, PositionRegime::MuNegLarge)?;
    let cfg = &state.cfg;
    let tol = cfg.snap_tol();
    let targets = [(0.0, f64::INFINITY)];
    let ws = workspace_from(&state.density);
    let pieces = assemble_step(&ws, &cfg.params, &targets, tol);
    let atom = next_atom(&ws, &cfg.params);
    Ok(finish_step(state, pieces, atom, ws.shift + cfg.params.mu, ws.scale, true))
}

/// The law of `W_n`: the point mass at `x` for `n = 0`, otherwise the
/// one-step law advanced by the regime's stepper.
pub fn density_at(cfg: &ProcessConfig, n: u32) -> Result<MixedDensity> {
    let regime = dispatch_position_regime(cfg);
    if n == 0 {
        return Ok(MixedDensity {
            n: 0,
            atom: if cfg.x == 0.0 { 1.0 } else { 0.0 },
            segments: vec![],
            regime,
            sigma: cfg.params.sigma,
            dirac_at: Some(cfg.x),
        });
    }
    let mut state = PositionRecursionState {
        cfg: *cfg,
        n: 1,
        regime,
        subcase: PositionRecursionState::piece_one_status(cfg, 1),
        density: one_step_law(cfg),
    };
    while state.n < n {
        state = match regime {
            PositionRegime::MuNonNeg => step_mu_nonneg(&state)?,
            PositionRegime::MuNegSmall => step_mu_neg_small(&state)?,
            PositionRegime::MuNegLarge => step_mu_neg_large(&state)?,
        };
    }
    Ok(state.density)
}

// ---------------------------------------------------------------------------
// functionals of the density
// ---------------------------------------------------------------------------

/// `F_n(u) = c_n + int_0^u f_n`, each segment integrated in closed form.
/// Negative `u` returns 0 by the distribution-function convention.
pub fn cdf(d: &MixedDensity, u: f64) -> f64 {
    if u < 0.0 {
        return 0.0;
    }
    if let Some(x0) = d.dirac_at {
        return if u >= x0 { 1.0 } else { 0.0 };
    }
    let mut acc = d.atom;
    for seg in &d.segments {
        if u <= seg.lo {
            break;
        }
        let hi = seg.hi.min(u);
        acc += kernel::exp_poly_int_scaled(&seg.a, seg.shift, 1.0 / d.sigma, seg.lo, hi, seg.log_scale)
            + kernel::exp_poly_int_scaled(&seg.b, seg.shift, -1.0 / d.sigma, seg.lo, hi, seg.log_scale);
    }
    acc
}

/// `|c_n - sigma f_n^1(0+)|`: the identity tying the atom to the first
/// segment's value at zero under nonnegative drift.
pub fn corollary_c_identity(d_next: &MixedDensity) -> Result<f64> {
    if d_next.regime != PositionRegime::MuNonNeg {
        return Err(Error::RegimeMismatch {
            expected: PositionRegime::MuNonNeg.label().into(),
            got: d_next.regime.label().into(),
        });
    }
    let f0 = d_next.segments[0].eval(0.0, d_next.sigma);
    Ok((d_next.atom - d_next.sigma * f0).abs())
}

/// `E[W_n^order]` for order 1 or 2 by analytic segment integration.
pub fn moments(d: &MixedDensity, order: u32) -> Result<f64> {
    if !(order == 1 || order == 2) {
        return Err(Error::InvalidParameter(format!(
            "moments implemented for orders 1 and 2, got {order}"
        )));
    }
    if let Some(x0) = d.dirac_at {
        return Ok(x0.powi(order as i32));
    }
    // multiply the piece polynomial by u^order = (t + shift)^order
    let lift = |c: &[f64], s: f64| -> Vec<f64> {
        if c.is_empty() {
            return vec![];
        }
        let mut out = vec![0.0; c.len() + order as usize];
        for (k, &ck) in c.iter().enumerate() {
            match order {
                1 => {
                    out[k + 1] += ck;
                    out[k] += s * ck;
                }
                _ => {
                    out[k + 2] += ck;
                    out[k + 1] += 2.0 * s * ck;
                    out[k] += s * s * ck;
                }
            }
        }
        out
    };
    let mut acc = 0.0;
    for seg in &d.segments {
        if seg.hi.is_infinite() && !seg.a.is_empty() {
            return Err(Error::Numeric(
                "rising coefficients on the unbounded piece".into(),
            ));
        }
        let la = lift(&seg.a, seg.shift);
        let lb = lift(&seg.b, seg.shift);
        acc += kernel::exp_poly_int_scaled(&la, seg.shift, 1.0 / d.sigma, seg.lo, seg.hi, seg.log_scale)
            + kernel::exp_poly_int_scaled(&lb, seg.shift, -1.0 / d.sigma, seg.lo, seg.hi, seg.log_scale);
    }
    Ok(acc)
}
