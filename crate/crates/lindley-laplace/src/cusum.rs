//! CUSUM change detection driven by Laplace observations.
//!
//! Pre-change observations follow `Laplace(mu, sigma)`; the post-change
//! density is the exponential tilt `g(x) = f(x) e^{theta x - b(theta)}`.
//! The detector accumulates the log-likelihood ratio
//! `LLR_n = theta X_n - b(theta)`, which is itself Laplace distributed with
//! location `theta mu - b(theta)` and scale `sigma theta` under the
//! pre-change law, so the detector statistic is exactly a Lindley process
//! with Laplace increments: run-length questions reduce to the first-exit
//! machinery with the mapped parameters, no approximations involved.

use crate::fet::{fet_table, FetPmf};
use crate::model::{FetDistribution, LaplaceParams, ProcessConfig};
use crate::{Error, Result};

/// Minimum admissible tilt: below this the mapped scale `sigma theta`
/// degenerates and no recursion hypothesis applies.
pub const THETA_MIN: f64 = 1e-6;

/// A Laplace pre/post-change testing problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CusumSpec {
    /// Pre-change observation law.
    pub base: LaplaceParams,
    /// Exponential tilt parameter of the post-change law.
    pub theta: f64,
    /// Detector boundary `h`.
    pub threshold: f64,
}

impl CusumSpec {
    pub fn new(base: LaplaceParams, theta: f64, threshold: f64) -> Result<Self> {
        if (theta * base.sigma).abs() >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "tilt must satisfy |theta sigma| < 1, got theta={theta}, sigma={}",
                base.sigma
            )));
        }
        if theta < THETA_MIN {
            return Err(Error::InvalidParameter(format!(
                "tilt must be >= {THETA_MIN} (positive mean shift), got {theta}"
            )));
        }
        if threshold.is_nan() || threshold <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "threshold must be positive, got {threshold}"
            )));
        }
        Ok(CusumSpec {
            base,
            theta,
            threshold,
        })
    }

    /// Cumulant `b(theta) = log E[e^{theta X}] = mu theta - log(1 - sigma^2 theta^2)`.
    pub fn log_mgf(&self) -> f64 {
        let st = self.base.sigma * self.theta;
        self.base.mu * self.theta - (1.0 - st * st).ln()
    }

    /// Pre-change law of the log-likelihood ratio:
    /// `Laplace(theta mu - b(theta), sigma theta)`.
    pub fn llr_params(&self) -> Result<LaplaceParams> {
        LaplaceParams::new(
            self.theta * self.base.mu - self.log_mgf(),
            self.base.sigma * self.theta,
        )
    }

    /// Mean of the post-change (tilted) observation law,
    /// `mu + 2 sigma^2 theta / (1 - sigma^2 theta^2)`.
    pub fn post_change_mean(&self) -> f64 {
        let s2 = self.base.sigma * self.base.sigma;
        let d = 1.0 - s2 * self.theta * self.theta;
        self.base.mu + 2.0 * s2 * self.theta / d
    }

    /// The Lindley configuration the detector statistic follows in control.
    pub fn detector_config(&self, x0: f64) -> Result<ProcessConfig> {
        ProcessConfig::new(self.llr_params()?, x0, Some(self.threshold))
    }
}

/// In-control run-length pmf of the detector started at `x0`: exactly the
/// first-exit-time table of the mapped Lindley process.
pub fn run_length_distribution(spec: &CusumSpec, x0: f64, n_max: u32) -> Result<FetDistribution> {
    fet_table(&spec.detector_config(x0)?, n_max)
}

/// The run-length pmf at one `n`, delegation to the exit-time engine.
pub fn run_length_pmf(spec: &CusumSpec, x0: f64, n: u32) -> Result<FetPmf> {
    crate::fet::fet_pmf(&spec.detector_config(x0)?, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(mu: f64, sigma: f64, theta: f64, h: f64) -> CusumSpec {
        CusumSpec::new(LaplaceParams::new(mu, sigma).unwrap(), theta, h).unwrap()
    }

    #[test]
    fn log_mgf_examples() {
        let s = spec(0.0, 1.0, 0.5, 3.0);
        assert!((s.log_mgf() - (-(0.75f64).ln())).abs() < 1e-15);
        let s = spec(0.3, 2.0, 0.4, 3.0);
        assert!((s.log_mgf() - (0.12 - (1.0 - 0.64f64).ln())).abs() < 1e-15);
    }

    #[test]
    fn llr_params_examples() {
        let s = spec(0.0, 1.0, 0.5, 3.0);
        let p = s.llr_params().unwrap();
        assert!((p.mu - (0.75f64).ln()).abs() < 1e-15); // = -0.2876820724...
        assert!((p.sigma - 0.5).abs() < 1e-15);
        assert!((s.post_change_mean() - 2.0 * 0.5 / 0.75).abs() < 1e-15);
    }

    #[test]
    fn rejects_degenerate_tilts() {
        let base = LaplaceParams::new(0.0, 1.0).unwrap();
        assert!(CusumSpec::new(base, 1.5, 3.0).is_err()); // |theta sigma| >= 1
        assert!(CusumSpec::new(base, 1e-9, 3.0).is_err()); // below THETA_MIN
    }

    #[test]
    fn pre_change_llr_mean_is_negative() {
        // theta mu - b(theta) = ln(1 - sigma^2 theta^2) < 0 for any valid theta
        for &mu in &[-1.0, 0.0, 0.7] {
            for &theta in &[0.1, 0.3, 0.6, 0.9] {
                let s = spec(mu, 1.0, theta, 3.0);
                let p = s.llr_params().unwrap();
                assert!(p.mu < 0.0, "mu={mu} theta={theta}: llr mean {}", p.mu);
            }
        }
    }

    #[test]
    fn run_length_delegates_bit_identically() {
        let s = spec(0.0, 1.0, 0.5, 3.0);
        let rl = run_length_distribution(&s, 0.0, 25).unwrap();
        let direct = fet_table(&s.detector_config(0.0).unwrap(), 25).unwrap();
        for n in 1..=25 {
            for i in 0..20 {
                let x = i as f64 * 3.0 / 20.0;
                let a = rl.pmf(n, x).unwrap();
                let b = direct.pmf(n, x).unwrap();
                assert_eq!(a.to_bits(), b.to_bits(), "n={n} x={x}");
            }
        }
    }

    #[test]
    fn mapping_round_trips() {
        let s = spec(0.25, 1.5, 0.5, 2.0);
        let p = s.llr_params().unwrap();
        // invert: sigma theta and theta mu - b(theta) reproduce the inputs
        assert!((p.sigma / s.base.sigma - s.theta).abs() < 1e-15);
        let b = s.base.mu * s.theta - p.mu;
        assert!((b - s.log_mgf()).abs() < 1e-15);
    }
}
