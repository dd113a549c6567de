//! Closed form vs oracle comparison runs, shared by the `compare`
//! subcommand and the acceptance suite.

use crate::model::ProcessConfig;
use crate::oracle::{
    ck_convolve, exit_base, exit_recursion_step, simulate, suggested_domain, GridFunction,
    McConfig,
};
use crate::{density, fet, Result};

/// Result of one closed-form-vs-oracle run.
#[derive(Debug, Clone)]
pub struct CompareOutcome {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub sup_discrepancy: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Density closed form against the convolution chain started from the point
/// mass, trapezoid step `step`. Tolerance 1e-4 in sup norm.
pub fn density_vs_quad(cfg: &ProcessConfig, n: u32, step: f64) -> Result<CompareOutcome> {
    let hi = suggested_domain(cfg, n);
    let mut g = GridFunction::dirac(cfg.x, step, hi);
    for _ in 0..n {
        g = ck_convolve(&g, &cfg.params)?;
    }
    let d = density_at_checked(cfg, n)?;
    let mut rows = Vec::new();
    let mut sup = (g.atom - d.atom).abs();
    let stride = (g.values.len() / 2000).max(1);
    for (j, &v) in g.values.iter().enumerate() {
        let u = j as f64 * step;
        let closed = d.evaluate(u)?;
        let diff = (closed - v).abs();
        sup = sup.max(diff);
        if j % stride == 0 {
            rows.push(vec![u, closed, v, diff]);
        }
    }
    let tolerance = 1e-4;
    Ok(CompareOutcome {
        columns: vec!["u".into(), "closed_form".into(), "oracle".into(), "abs_diff".into()],
        rows,
        sup_discrepancy: sup,
        tolerance,
        pass: sup < tolerance,
    })
}

fn density_at_checked(cfg: &ProcessConfig, n: u32) -> Result<crate::model::MixedDensity> {
    density::density_at(cfg, n)
}

/// Density closed form against Monte Carlo: the atom frequency must sit
/// within four standard errors and the CDF within a DKW-style band.
pub fn density_vs_mc(
    cfg: &ProcessConfig,
    n: u32,
    trajectories: u64,
    seed: u64,
) -> Result<CompareOutcome> {
    let d = density_at_checked(cfg, n)?;
    let mc = McConfig {
        trajectories,
        seed,
        n_max: n,
        bins: 400,
        domain_hi: suggested_domain(cfg, n),
    };
    let r = simulate(cfg, &mc)?;
    let atom_hat = r.atom_freq_by_n[(n - 1) as usize];
    let atom_se = r.atom_se_by_n[(n - 1) as usize].max(1e-12);
    let atom_pull = (atom_hat - d.atom).abs() / atom_se;

    let mut rows = Vec::new();
    let mut cdf_sup = 0.0f64;
    for (edge, emp) in r.cdf_at_edges(n) {
        let exact = density::cdf(&d, edge);
        let diff = (emp - exact).abs();
        cdf_sup = cdf_sup.max(diff);
        rows.push(vec![edge, exact, emp, diff]);
    }
    let tolerance = 0.005;
    let pass = atom_pull <= 4.0 && cdf_sup < tolerance;
    Ok(CompareOutcome {
        columns: vec!["u".into(), "cdf_closed".into(), "cdf_empirical".into(), "abs_diff".into()],
        rows,
        sup_discrepancy: cdf_sup,
        tolerance,
        pass,
    })
}

/// Exit-time closed form against the conditioning-quadrature chain at 50
/// interior points per step; tolerance 1e-6 absolute.
pub fn fet_vs_quad(cfg: &ProcessConfig, n_max: u32, nodes: usize) -> Result<CompareOutcome> {
    let h = cfg.h.ok_or_else(|| {
        crate::Error::InvalidParameter("exit-time comparison needs a boundary".into())
    })?;
    let table = fet::fet_table(cfg, n_max)?;
    let mut grid = exit_base(cfg, nodes);
    let mut rows = Vec::new();
    let mut sup = 0.0f64;
    for n in 1..=n_max {
        if n > 1 {
            grid = exit_recursion_step(&grid, cfg);
        }
        for i in 0..50 {
            let x = (i as f64 + 0.5) / 50.0 * h;
            let closed = table.pmf(n, x)?;
            let quad = grid.interp(x);
            let diff = (closed - quad).abs();
            sup = sup.max(diff);
            rows.push(vec![n as f64, x, closed, quad, diff]);
        }
    }
    let tolerance = 1e-6;
    Ok(CompareOutcome {
        columns: vec![
            "n".into(),
            "x".into(),
            "closed_form".into(),
            "oracle".into(),
            "abs_diff".into(),
        ],
        rows,
        sup_discrepancy: sup,
        tolerance,
        pass: sup < tolerance,
    })
}

/// Exit-time closed form against Monte Carlo exit counts: every pmf value
/// within five standard errors (of the largest standard error observed).
pub fn fet_vs_mc(
    cfg: &ProcessConfig,
    n_max: u32,
    trajectories: u64,
    seed: u64,
) -> Result<CompareOutcome> {
    let table = fet::fet_table(cfg, n_max)?;
    let mc = McConfig {
        trajectories,
        seed,
        n_max,
        bins: 10,
        domain_hi: suggested_domain(cfg, n_max),
    };
    let r = simulate(cfg, &mc)?;
    let x = cfg.x;
    let mut rows = Vec::new();
    let mut sup = 0.0f64;
    let mut max_se = 0.0f64;
    for n in 1..=n_max {
        let (p_hat, se) = r.fet_pmf(n);
        let p = table.pmf(n, x)?;
        let diff = (p_hat - p).abs();
        sup = sup.max(diff);
        max_se = max_se.max(se);
        rows.push(vec![n as f64, p, p_hat, se]);
    }
    let tolerance = 5.0 * max_se.max(1e-12);
    Ok(CompareOutcome {
        columns: vec!["n".into(), "closed_form".into(), "empirical".into(), "std_error".into()],
        rows,
        sup_discrepancy: sup,
        tolerance,
        pass: sup < tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LaplaceParams;

    #[test]
    fn quick_density_quad_compare_passes() {
        let cfg = ProcessConfig::new(LaplaceParams::new(0.3, 1.0).unwrap(), 1.0, None).unwrap();
        let out = density_vs_quad(&cfg, 2, 2e-3).unwrap();
        assert!(out.pass, "sup {}", out.sup_discrepancy);
    }

    #[test]
    fn quick_fet_mc_compare_passes() {
        let cfg =
            ProcessConfig::new(LaplaceParams::new(-2.0, 1.0).unwrap(), 0.0, Some(1.0)).unwrap();
        let out = fet_vs_mc(&cfg, 20, 200_000, 42).unwrap();
        assert!(out.pass, "sup {} tol {}", out.sup_discrepancy, out.tolerance);
    }
}
