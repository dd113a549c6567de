//! Monte-Carlo simulation of `W_n = max(0, W_{n-1} + Z_n)`.
//!
//! Each trajectory owns an independent ChaCha stream keyed by
//! `(seed, trajectory index)`, so results are bitwise reproducible no matter
//! how the work is split across threads: all tallies are integer counts and
//! integer addition commutes.

use crate::model::ProcessConfig;
use crate::{Error, Result};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Simulation size and tally layout.
#[derive(Debug, Clone, Copy)]
pub struct McConfig {
    pub trajectories: u64,
    pub seed: u64,
    pub n_max: u32,
    /// Number of equal-width histogram bins on `(0, domain_hi)`; mass at or
    /// beyond `domain_hi` lands in one extra overflow bucket.
    pub bins: usize,
    pub domain_hi: f64,
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trajectories == 0 || self.bins < 10 || self.domain_hi.is_nan() || self.domain_hi <= 0.0 || self.n_max == 0 {
            return Err(Error::InvalidParameter(format!(
                "Monte-Carlo config: trajectories >= 1, bins >= 10, domain_hi > 0, n_max >= 1 \
                 required, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Tallies from [`simulate`]. Histograms are fractions of trajectories; the
/// underlying integer counts always sum (with the atom) to the trajectory
/// count exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct McResult {
    pub trajectories: u64,
    /// Fraction of trajectories exactly at zero after step `n` (index `n-1`).
    pub atom_freq_by_n: Vec<f64>,
    /// Standard error of each atom frequency.
    pub atom_se_by_n: Vec<f64>,
    /// Per-`n` bin fractions; length `bins + 1`, last entry is the overflow
    /// bucket at `>= domain_hi`.
    pub histogram_by_n: Vec<Vec<f64>>,
    /// Trajectories whose first crossing of `h` happened exactly at step `n`
    /// (index `n-1`); empty when the config has no boundary.
    pub fet_counts: Vec<u64>,
    /// Trajectories that never crossed within `n_max` steps.
    pub fet_censored: u64,
    bins: usize,
    domain_hi: f64,
}

impl McResult {
    /// Empirical exit probability at step `n` with its standard error.
    pub fn fet_pmf(&self, n: u32) -> (f64, f64) {
        let p = self.fet_counts[(n - 1) as usize] as f64 / self.trajectories as f64;
        let se = (p * (1.0 - p) / self.trajectories as f64).sqrt();
        (p, se)
    }

    /// Empirical CDF of the position after step `n`, evaluated at every bin
    /// edge `k * domain_hi / bins` (k = 0 gives the atom alone).
    pub fn cdf_at_edges(&self, n: u32) -> Vec<(f64, f64)> {
        let hist = &self.histogram_by_n[(n - 1) as usize];
        let atom = self.atom_freq_by_n[(n - 1) as usize];
        let width = self.domain_hi / self.bins as f64;
        let mut acc = atom;
        let mut out = Vec::with_capacity(self.bins + 1);
        out.push((0.0, acc));
        for (j, &mass) in hist.iter().take(self.bins).enumerate() {
            acc += mass;
            out.push(((j + 1) as f64 * width, acc));
        }
        out
    }
}

/// Inverse-CDF transform of a uniform draw in `(0, 1)` to the Laplace law:
/// `mu - sigma * sign(u - 1/2) * ln(1 - 2|u - 1/2|)`.
pub fn sample_laplace(params: &crate::model::LaplaceParams, uniform: f64) -> Result<f64> {
    if !(uniform > 0.0 && uniform < 1.0) {
        return Err(Error::Domain(format!(
            "uniform draw must lie strictly inside (0,1), got {uniform}"
        )));
    }
    let d = uniform - 0.5;
    Ok(params.mu - params.sigma * d.signum() * (1.0 - 2.0 * d.abs()).ln())
}

#[derive(Clone)]
struct Tally {
    zeros: Vec<u64>,
    hist: Vec<u64>, // n_max * (bins + 1), row-major
    fet: Vec<u64>,
    censored: u64,
}

impl Tally {
    fn new(n_max: usize, bins: usize) -> Self {
        Tally {
            zeros: vec![0; n_max],
            hist: vec![0; n_max * (bins + 1)],
            fet: vec![0; n_max],
            censored: 0,
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.zeros.iter_mut().zip(&other.zeros) {
            *a += b;
        }
        for (a, b) in self.hist.iter_mut().zip(&other.hist) {
            *a += b;
        }
        for (a, b) in self.fet.iter_mut().zip(&other.fet) {
            *a += b;
        }
        self.censored += other.censored;
        self
    }
}

fn trajectory_rng(seed: u64, idx: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&idx.to_le_bytes());
    key[16] = 0x4c; // stream domain tag
    ChaCha8Rng::from_seed(key)
}

#[inline]
fn next_unit_open(rng: &mut ChaCha8Rng) -> f64 {
    // 53 random bits shifted into (0, 1): never exactly 0 or 1.
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// Run the reflected recursion for every trajectory, recording the exact-zero
/// indicator, position histograms, and the first step at which `h` (when
/// configured) is reached or exceeded.
pub fn simulate(cfg: &ProcessConfig, mc: &McConfig) -> Result<McResult> {
    mc.validate()?;
    let n_max = mc.n_max as usize;
    let bins = mc.bins;
    let width = mc.domain_hi / bins as f64;
    let params = cfg.params;
    let h = cfg.h;
    let x0 = cfg.x;

    let tally = (0..mc.trajectories)
        .into_par_iter()
        .fold(
            || Tally::new(n_max, bins),
            |mut t, idx| {
                let mut rng = trajectory_rng(mc.seed, idx);
                let mut w = x0;
                let mut exited = false;
                for n in 0..n_max {
                    let u = next_unit_open(&mut rng);
                    let z = params.mu
                        - params.sigma * (u - 0.5).signum() * (1.0 - 2.0 * (u - 0.5).abs()).ln();
                    w = (w + z).max(0.0);
                    if w == 0.0 {
                        t.zeros[n] += 1;
                    }
                    let bin = if w > 0.0 && w < mc.domain_hi {
                        (w / width) as usize
                    } else if w == 0.0 {
                        0 // zero mass sits in the atom; keep bin untouched below
                    } else {
                        bins
                    };
                    if w > 0.0 {
                        t.hist[n * (bins + 1) + bin.min(bins)] += 1;
                    }
                    if let Some(h) = h {
                        if !exited && w >= h {
                            t.fet[n] += 1;
                            exited = true;
                        }
                    }
                }
                if h.is_some() && !exited {
                    t.censored += 1;
                }
                t
            },
        )
        .reduce(|| Tally::new(n_max, bins), Tally::merge);

    let total = mc.trajectories as f64;
    let atom_freq_by_n: Vec<f64> = tally.zeros.iter().map(|&c| c as f64 / total).collect();
    let atom_se_by_n = atom_freq_by_n
        .iter()
        .map(|&p| (p * (1.0 - p) / total).sqrt())
        .collect();
    let histogram_by_n = (0..n_max)
        .map(|n| {
            tally.hist[n * (bins + 1)..(n + 1) * (bins + 1)]
                .iter()
                .map(|&c| c as f64 / total)
                .collect()
        })
        .collect();
    Ok(McResult {
        trajectories: mc.trajectories,
        atom_freq_by_n,
        atom_se_by_n,
        histogram_by_n,
        fet_counts: if h.is_some() { tally.fet } else { Vec::new() },
        fet_censored: tally.censored,
        bins,
        domain_hi: mc.domain_hi,
    })
}
