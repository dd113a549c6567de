//! Table-emitting command line for the Lindley/Laplace distributions.
//!
//! Data goes to stdout (or `--out`), diagnostics to stderr. Exit codes:
//! 0 success, 2 invalid flags or preconditions, 3 numerical invariant
//! breach, 4 failed oracle comparison.

use clap::{Args, Parser, Subcommand, ValueEnum};
use lindley_laplace::model::{dispatch_fet_regime, dispatch_position_regime};
use lindley_laplace::report::{fmt_g17, Diagnostics, Metadata, OutputRecord, SCHEMA_VERSION};
use lindley_laplace::{compare, cusum, density, fet, Error, LaplaceParams, ProcessConfig};
use std::io::Write;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lindley", version, about = "Exact Lindley-process tables with Laplace jumps")]
struct Cli {
    /// Worker threads for the oracle paths (default: LINDLEY_THREADS or all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Position density f_n(u) on a grid, one record per n (or per sigma)
    Density(DensityArgs),
    /// First-exit-time probabilities P(n|x) for n = 1..nmax
    Fet(FetArgs),
    /// Closed form against an independent oracle, with PASS/FAIL verdict
    Compare(CompareArgs),
    /// CUSUM run-length table via the log-likelihood-ratio mapping
    Cusum(CusumArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct DensityArgs {
    /// Increment location
    #[arg(long, allow_hyphen_values = true)]
    mu: f64,
    /// Increment scale; comma list sweeps sigma
    #[arg(long, value_delimiter = ',', required = true)]
    sigma: Vec<f64>,
    /// Start position W_0
    #[arg(long)]
    x: f64,
    /// Time indices; comma list sweeps n
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<u32>,
    /// Evaluation grid lo:hi:step
    #[arg(long, default_value = "0:10:0.01")]
    grid: String,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output path, or "stdout"
    #[arg(long, default_value = "stdout")]
    out: String,
}

#[derive(Args)]
struct FetArgs {
    #[arg(long, allow_hyphen_values = true)]
    mu: f64,
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    x: f64,
    /// Exit boundary
    #[arg(long)]
    h: f64,
    /// Largest time index tabulated
    #[arg(long)]
    nmax: u32,
    /// Add the cumulative column
    #[arg(long)]
    cdf: bool,
    /// Report the mean exit time with its truncation bound
    #[arg(long)]
    mean: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, default_value = "stdout")]
    out: String,
}

#[derive(Args)]
struct CompareArgs {
    #[command(subcommand)]
    target: CompareTarget,
}

#[derive(Subcommand)]
enum CompareTarget {
    /// Compare the position density against an oracle
    Density(CompareDensityArgs),
    /// Compare the exit-time law against an oracle
    Fet(CompareFetArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OracleKind {
    Mc,
    Quad,
}

#[derive(Args)]
struct CompareDensityArgs {
    #[arg(long, value_enum)]
    oracle: OracleKind,
    #[arg(long, allow_hyphen_values = true)]
    mu: f64,
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    x: f64,
    #[arg(long)]
    n: u32,
    /// Quadrature grid spacing
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
    #[arg(long, default_value_t = 1_000_000)]
    trajectories: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, default_value = "stdout")]
    out: String,
}

#[derive(Args)]
struct CompareFetArgs {
    #[arg(long, value_enum)]
    oracle: OracleKind,
    #[arg(long, allow_hyphen_values = true)]
    mu: f64,
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    x: f64,
    #[arg(long)]
    h: f64,
    #[arg(long, default_value_t = 10)]
    nmax: u32,
    /// Exit-grid node count (quad oracle)
    #[arg(long, default_value_t = 4001)]
    nodes: usize,
    #[arg(long, default_value_t = 1_000_000)]
    trajectories: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, default_value = "stdout")]
    out: String,
}

#[derive(Args)]
struct CusumArgs {
    /// Pre-change observation location
    #[arg(long, allow_hyphen_values = true)]
    mu: f64,
    /// Pre-change observation scale
    #[arg(long)]
    sigma: f64,
    /// Exponential tilt of the post-change law
    #[arg(long)]
    theta: f64,
    /// Detector threshold
    #[arg(long)]
    h: f64,
    /// Detector start value
    #[arg(long, default_value_t = 0.0)]
    x0: f64,
    #[arg(long)]
    nmax: u32,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, default_value = "stdout")]
    out: String,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Numeric(_) => 3,
            _ => 2,
        };
        Failure::new(code, e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli
        .threads
        .or_else(|| std::env::var("LINDLEY_THREADS").ok().and_then(|v| v.parse().ok()));
    if let Some(t) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let result = match cli.cmd {
        Cmd::Density(args) => run_density(args),
        Cmd::Fet(args) => run_fet(args),
        Cmd::Compare(args) => run_compare(args),
        Cmd::Cusum(args) => run_cusum(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Failure::new(2, format!("grid must be lo:hi:step, got '{spec}'")));
    }
    let lo: f64 = parts[0].parse().map_err(|_| Failure::new(2, "bad grid lo"))?;
    let hi: f64 = parts[1].parse().map_err(|_| Failure::new(2, "bad grid hi"))?;
    let step: f64 = parts[2].parse().map_err(|_| Failure::new(2, "bad grid step"))?;
    if step.is_nan() || step <= 0.0 || hi.is_nan() || hi <= lo || lo < 0.0 {
        return Err(Failure::new(
            2,
            format!("grid needs 0 <= lo < hi and step > 0, got '{spec}'"),
        ));
    }
    let count = ((hi - lo) / step).floor() as usize + 1;
    Ok((0..count).map(|i| lo + i as f64 * step).collect())
}

fn emit(records: &[OutputRecord], format: Format, out: &str) -> Result<(), Failure> {
    let body = match format {
        Format::Csv => records.iter().map(OutputRecord::to_csv).collect::<String>(),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(records).expect("records serialize");
            s.push('\n');
            s
        }
    };
    if out == "stdout" {
        std::io::stdout()
            .write_all(body.as_bytes())
            .map_err(|e| Failure::new(3, e.to_string()))?;
    } else {
        std::fs::write(out, body).map_err(|e| Failure::new(2, format!("cannot write {out}: {e}")))?;
    }
    Ok(())
}

fn checked_rows(rows: Vec<Vec<f64>>, what: &str) -> Result<Vec<Vec<f64>>, Failure> {
    for row in &rows {
        for &v in &row[1..] {
            if v < -1e-9 || !v.is_finite() {
                return Err(Failure::new(
                    3,
                    format!("{what} produced an invalid value {v:e}; refusing to emit"),
                ));
            }
        }
    }
    // tiny negative roundoff is clamped, anything worse was rejected above
    Ok(rows
        .into_iter()
        .map(|r| {
            let mut r = r;
            for v in r.iter_mut().skip(1) {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            r
        })
        .collect())
}

fn run_density(args: DensityArgs) -> Result<(), Failure> {
    if args.sigma.len() > 1 && args.n.len() > 1 {
        return Err(Failure::new(2, "sweep either sigma or n, not both"));
    }
    let grid = parse_grid(&args.grid)?;
    let mut records = Vec::new();
    for &sigma in &args.sigma {
        let params = LaplaceParams::new(args.mu, sigma)?;
        let cfg = ProcessConfig::new(params, args.x, None)?;
        for &n in &args.n {
            let d = density::density_at(&cfg, n)?;
            let defect = (d.total_mass() - 1.0).abs();
            if defect > 1e-6 {
                return Err(Failure::new(
                    3,
                    format!("mass defect {defect:e} at n={n} exceeds 1e-6"),
                ));
            }
            let mut rows = Vec::with_capacity(grid.len());
            for &u in &grid {
                rows.push(vec![u, d.evaluate(u)?]);
            }
            let rows = checked_rows(rows, "density")?;
            records.push(OutputRecord {
                schema_version: SCHEMA_VERSION.into(),
                kind: "density".into(),
                metadata: Metadata {
                    mu: args.mu,
                    sigma,
                    x: args.x,
                    h: None,
                    n: Some(n),
                    theta: None,
                    regime: regime_case_label(&cfg, n),
                },
                atom: Some(d.atom),
                columns: vec!["u".into(), "f".into()],
                rows,
                diagnostics: Diagnostics {
                    mass_defect: Some(defect),
                    ..Default::default()
                },
            });
        }
    }
    emit(&records, args.format, &args.out)
}

/// Regime label including the sub-case actually active at step n.
fn regime_case_label(cfg: &ProcessConfig, n: u32) -> String {
    let regime = dispatch_position_regime(cfg);
    match regime {
        lindley_laplace::PositionRegime::MuNegSmall => {
            let alive = cfg.x + n as f64 * cfg.params.mu > cfg.snap_tol();
            format!(
                "{}/{}",
                regime.label(),
                if alive { "case-x+nmu>0" } else { "case-x+nmu<=0" }
            )
        }
        _ => regime.label().into(),
    }
}

fn run_fet(args: FetArgs) -> Result<(), Failure> {
    if args.nmax == 0 {
        return Err(Failure::new(2, "nmax must be at least 1"));
    }
    let params = LaplaceParams::new(args.mu, args.sigma)?;
    let cfg = ProcessConfig::new(params, args.x, Some(args.h))?;
    let regime = dispatch_fet_regime(&cfg)?;
    let table = fet::fet_table(&cfg, args.nmax)?;
    let mut rows = Vec::with_capacity(args.nmax as usize);
    let mut acc = 0.0;
    for n in 1..=args.nmax {
        let p = table.pmf(n, args.x)?;
        acc += p;
        if args.cdf {
            rows.push(vec![n as f64, p, acc]);
        } else {
            rows.push(vec![n as f64, p]);
        }
    }
    let rows = checked_rows(rows, "exit-time pmf")?;
    let mut diagnostics = Diagnostics::default();
    if args.mean {
        let m = fet::mean_fet(&cfg, 1e-9)?;
        diagnostics.mean = Some(m.mean);
        diagnostics.mean_tail_bound = Some(m.tail_bound);
    }
    let columns = if args.cdf {
        vec!["n".into(), "p".into(), "cumulative".into()]
    } else {
        vec!["n".into(), "p".into()]
    };
    let record = OutputRecord {
        schema_version: SCHEMA_VERSION.into(),
        kind: "fet".into(),
        metadata: Metadata {
            mu: args.mu,
            sigma: args.sigma,
            x: args.x,
            h: Some(args.h),
            n: Some(args.nmax),
            theta: None,
            regime: regime.label().into(),
        },
        atom: None,
        columns,
        rows,
        diagnostics,
    };
    emit(std::slice::from_ref(&record), args.format, &args.out)
}

fn run_compare(args: CompareArgs) -> Result<(), Failure> {
    match args.target {
        CompareTarget::Density(a) => {
            let params = LaplaceParams::new(a.mu, a.sigma)?;
            let cfg = ProcessConfig::new(params, a.x, None)?;
            let outcome = match a.oracle {
                OracleKind::Quad => compare::density_vs_quad(&cfg, a.n, a.step)?,
                OracleKind::Mc => compare::density_vs_mc(&cfg, a.n, a.trajectories, a.seed)?,
            };
            finish_compare(
                outcome,
                Metadata {
                    mu: a.mu,
                    sigma: a.sigma,
                    x: a.x,
                    h: None,
                    n: Some(a.n),
                    theta: None,
                    regime: regime_case_label(&cfg, a.n),
                },
                a.format,
                &a.out,
            )
        }
        CompareTarget::Fet(a) => {
            if a.nmax == 0 {
                return Err(Failure::new(2, "nmax must be at least 1"));
            }
            let params = LaplaceParams::new(a.mu, a.sigma)?;
            let cfg = ProcessConfig::new(params, a.x, Some(a.h))?;
            let regime = dispatch_fet_regime(&cfg)?;
            let outcome = match a.oracle {
                OracleKind::Quad => compare::fet_vs_quad(&cfg, a.nmax, a.nodes)?,
                OracleKind::Mc => compare::fet_vs_mc(&cfg, a.nmax, a.trajectories, a.seed)?,
            };
            finish_compare(
                outcome,
                Metadata {
                    mu: a.mu,
                    sigma: a.sigma,
                    x: a.x,
                    h: Some(a.h),
                    n: Some(a.nmax),
                    theta: None,
                    regime: regime.label().into(),
                },
                a.format,
                &a.out,
            )
        }
    }
}

fn finish_compare(
    outcome: compare::CompareOutcome,
    metadata: Metadata,
    format: Format,
    out: &str,
) -> Result<(), Failure> {
    let record = OutputRecord {
        schema_version: SCHEMA_VERSION.into(),
        kind: "compare".into(),
        metadata,
        atom: None,
        columns: outcome.columns.clone(),
        rows: outcome.rows.clone(),
        diagnostics: Diagnostics {
            oracle_sup_discrepancy: Some(outcome.sup_discrepancy),
            tolerance: Some(outcome.tolerance),
            verdict: Some(if outcome.pass { "PASS".into() } else { "FAIL".into() }),
            ..Default::default()
        },
    };
    emit(std::slice::from_ref(&record), format, out)?;
    if outcome.pass {
        eprintln!(
            "PASS: sup discrepancy {} within {}",
            fmt_g17(outcome.sup_discrepancy),
            fmt_g17(outcome.tolerance)
        );
        Ok(())
    } else {
        Err(Failure::new(
            4,
            format!(
                "FAIL: sup discrepancy {} exceeds {}",
                fmt_g17(outcome.sup_discrepancy),
                fmt_g17(outcome.tolerance)
            ),
        ))
    }
}

fn run_cusum(args: CusumArgs) -> Result<(), Failure> {
    if args.nmax == 0 {
        return Err(Failure::new(2, "nmax must be at least 1"));
    }
    let base = LaplaceParams::new(args.mu, args.sigma)?;
    let spec = cusum::CusumSpec::new(base, args.theta, args.h)?;
    let llr = spec.llr_params()?;
    let detector = spec.detector_config(args.x0)?;
    let regime = dispatch_fet_regime(&detector)?;
    let table = cusum::run_length_distribution(&spec, args.x0, args.nmax)?;
    let mut rows = Vec::with_capacity(args.nmax as usize);
    let mut acc = 0.0;
    for n in 1..=args.nmax {
        let p = table.pmf(n, args.x0)?;
        acc += p;
        rows.push(vec![n as f64, p, acc]);
    }
    let rows = checked_rows(rows, "run-length pmf")?;
    let record = OutputRecord {
        schema_version: SCHEMA_VERSION.into(),
        kind: "cusum".into(),
        metadata: Metadata {
            mu: args.mu,
            sigma: args.sigma,
            x: args.x0,
            h: Some(args.h),
            n: Some(args.nmax),
            theta: Some(args.theta),
            regime: regime.label().into(),
        },
        atom: None,
        columns: vec!["n".into(), "p".into(), "cumulative".into()],
        rows,
        diagnostics: Diagnostics {
            log_mgf: Some(spec.log_mgf()),
            llr_location: Some(llr.mu),
            llr_scale: Some(llr.sigma),
            post_change_mean: Some(spec.post_change_mean()),
            ..Default::default()
        },
    };
    emit(std::slice::from_ref(&record), args.format, &args.out)
}
