//! `logderiv`: command-line front end for the logarithmic-derivative toolkit.
//!
//! Exit status: 0 when every verdict holds, 1 when a bound violation is
//! found, 2 on I/O or input errors, 3 on numerical failures.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use logderiv_core::certificate::{theorem2_witness, verify_certificate, CertificateError, DEFAULT_M};
use logderiv_core::explorer::{
    optimize_lenient, sharpness_table, ExplorerError, Objective, ObjectiveKind, SearchConfig, StudyRecord,
    SharpnessRow,
};
use logderiv_core::levelset::{delta_window, k_delta, level_set, theorem2_check, LevelQuery, LevelSetError};
use logderiv_core::polynorm::{endpoint_ratio, g_delta_positivity, verify_cor1, verify_cor2, DiskPolynomial};
use logderiv_core::quadrature::{theorem1_check_with, QuadratureError, QuadratureResult};
use logderiv_core::{ComplexPoint, PoleSet};

#[derive(Parser, Debug)]
#[command(name = "logderiv", version, about = "Bounds, level sets and certificates for logarithmic derivatives with unimodular poles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ObjectiveArg {
    /// Area integral of |g_n| over the unit disk.
    Area,
    /// Unweighted L_p mean of |g_n| on [-1, 1].
    Lp,
    /// L_p mean of |x g_n(x)| on [-1, 1].
    Lpw,
}

#[derive(clap::Args, Debug, Clone)]
struct Common {
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the L_p lower bounds and the level-set measure bound for a pole set.
    Verify {
        #[arg(long)]
        poles: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value_t = 0.25)]
        delta: f64,
        /// Relative quadrature tolerance.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Build and audit a certificate for the level-set measure bound.
    Witness {
        #[arg(long)]
        poles: PathBuf,
        #[arg(long, default_value_t = 0.25)]
        delta: f64,
        #[arg(long, default_value_t = DEFAULT_M)]
        m: usize,
        /// Points per witness interval in the audit.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Compute the exact level set E_delta and its part in the endpoint window.
    Measure {
        #[arg(long)]
        poles: PathBuf,
        #[arg(long, default_value_t = 0.25)]
        delta: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Tabulate the order-sharpness sandwich for n = 1..N.
    Sharpness {
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        /// Random configurations per row.
        #[arg(long, default_value_t = 16)]
        samples: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Chebyshev-norm inequalities for a polynomial (or a pole set read as its zeros).
    Norms {
        #[arg(long)]
        poles: PathBuf,
        #[arg(long, default_value_t = 0.4)]
        delta: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Search for configurations minimizing an objective.
    Explore {
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = ObjectiveArg::Area)]
        objective: ObjectiveArg,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value_t = 8)]
        seeds: usize,
        /// Total objective evaluations across all starts.
        #[arg(long, default_value_t = 2000)]
        budget: usize,
        /// Relative quadrature tolerance during the search.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Record wall-clock time (makes output differ between runs).
        #[arg(long)]
        timing: bool,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Numerics(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Numerics(_) => 3,
        }
    }
}

impl From<QuadratureError> for Failure {
    fn from(e: QuadratureError) -> Self {
        match e {
            QuadratureError::InvalidSpec(m) => Failure::Input(m),
            other => Failure::Numerics(other.to_string()),
        }
    }
}

impl From<LevelSetError> for Failure {
    fn from(e: LevelSetError) -> Self {
        match e {
            LevelSetError::RootIsolationFailure { .. } => Failure::Numerics(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

impl From<CertificateError> for Failure {
    fn from(e: CertificateError) -> Self {
        match e {
            CertificateError::LevelSet(inner) => inner.into(),
            other => Failure::Input(other.to_string()),
        }
    }
}

impl From<ExplorerError> for Failure {
    fn from(e: ExplorerError) -> Self {
        match e {
            ExplorerError::Quadrature(q) => q.into(),
            other => Failure::Input(other.to_string()),
        }
    }
}

/// What a command produced: the rendered output and whether every verdict held.
struct Outcome {
    text: String,
    passed: bool,
    violation: Option<String>,
}

fn read_input(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn load_poles(path: &Path) -> Result<PoleSet, Failure> {
    PoleSet::from_json(&read_input(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn check_out(out: &Option<PathBuf>) -> Result<(), Failure> {
    if let Some(path) = out {
        let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        if !parent.is_dir() {
            return Err(Failure::Input(format!("output directory {} does not exist", parent.display())));
        }
    }
    Ok(())
}

/// Short SHA-256 digest of the canonical pole-set document.
fn poles_hash(poles: &PoleSet) -> String {
    hex::encode(Sha256::digest(poles.to_json().as_bytes()))[..16].to_string()
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn quad_csv_row(out: &mut String, hash: &str, n: usize, p: f64, weighted: bool, r: &QuadratureResult) {
    writeln!(
        out,
        "{hash},{n},{p},{weighted},{},{},{},{}",
        r.value, r.error_estimate, r.divergent, r.panels
    )
    .expect("string write");
}

fn cmd_verify(poles_path: &Path, p: f64, delta: f64, tol: f64, format: Format) -> Result<Outcome, Failure> {
    let poles = load_poles(poles_path)?;
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Failure::Input(format!("delta must lie in (0, 1/2), got {delta}")));
    }
    let t1 = theorem1_check_with(&poles, p, tol)?;
    let t2 = theorem2_check(&poles, delta)?;
    let passed = t1.holds() && t2.holds;
    let hash = poles_hash(&poles);
    let text = match format {
        Format::Json => to_json(&json!({
            "polesHash": hash,
            "n": poles.len(),
            "p": p,
            "delta": delta,
            "lpBounds": t1,
            "divergent": t1.unweighted.divergent || t1.weighted.divergent,
            "levelSet": t2,
            "window": delta_window(poles.len(), delta),
            "allPassed": passed,
        })),
        Format::Csv => {
            let mut s = String::from("poles_hash,n,p,weighted,value,error,divergent,panels\n");
            quad_csv_row(&mut s, &hash, poles.len(), p, false, &t1.unweighted);
            quad_csv_row(&mut s, &hash, poles.len(), p, true, &t1.weighted);
            s
        }
    };
    let violation = (!passed).then(|| {
        format!(
            "bound violation for poles {hash}: lp ordering {}, lp bound {}, level-set bound {}",
            t1.unweighted_ge_weighted, t1.weighted_ge_bound, t2.holds
        )
    });
    Ok(Outcome { text, passed, violation })
}

fn cmd_witness(poles_path: &Path, delta: f64, m: usize, samples: usize, format: Format) -> Result<Outcome, Failure> {
    let poles = load_poles(poles_path)?;
    let cert = theorem2_witness(&poles, delta, m)?;
    let audit = verify_certificate(&poles, &cert, samples);
    let text = match format {
        Format::Json => to_json(&json!({ "certificate": cert, "verification": audit })),
        Format::Csv => {
            let pieces: Vec<String> = cert.witness.intervals().iter().map(|(a, b)| format!("{a}:{b}")).collect();
            format!(
                "case,n,m,delta,rho,witness,guaranteed_measure,verified\n{:?},{},{},{},{},{},{},{}\n",
                cert.case_tag,
                cert.n,
                cert.m,
                cert.delta,
                cert.rho,
                pieces.join(";"),
                cert.guaranteed_measure,
                audit.passed
            )
        }
    };
    let violation = (!audit.passed).then(|| format!("certificate failed its audit: {:?}", audit.diagnostics));
    Ok(Outcome { text, passed: audit.passed, violation })
}

fn cmd_measure(poles_path: &Path, delta: f64, format: Format) -> Result<Outcome, Failure> {
    let poles = load_poles(poles_path)?;
    let q = LevelQuery::for_poles(delta, &poles)?;
    let e = level_set(&poles, &q)?;
    let n = poles.len();
    let guaranteed = q.in_guarantee_range();
    let (window, window_measure, bound, holds) = if guaranteed {
        let w = delta_window(n, delta);
        let wm = e.intersect(&w).measure();
        let bound = k_delta(delta) / n as f64;
        (Some(w), Some(wm), Some(bound), Some(wm >= bound))
    } else {
        (None, None, None, None)
    };
    let passed = holds.unwrap_or(true);
    let text = match format {
        Format::Json => to_json(&json!({
            "polesHash": poles_hash(&poles),
            "n": n,
            "delta": delta,
            "levelSet": e,
            "measure": e.measure(),
            "window": window,
            "windowMeasure": window_measure,
            "bound": bound,
            "holds": holds,
        })),
        Format::Csv => {
            let mut s = String::from("a,b\n");
            for (a, b) in e.intervals() {
                writeln!(s, "{a},{b}").expect("string write");
            }
            s
        }
    };
    let violation = (!passed).then(|| format!("measure bound fails for poles {}", poles_hash(&poles)));
    Ok(Outcome { text, passed, violation })
}

fn cmd_sharpness(n: usize, p: f64, samples: usize, seed: u64, format: Format) -> Result<Outcome, Failure> {
    let rows = sharpness_table(n, p, samples, seed)?;
    let passed = rows.iter().all(SharpnessRow::brackets);
    let text = match format {
        Format::Json => to_json(&rows),
        Format::Csv => {
            let mut s = format!("{}\n", SharpnessRow::CSV_HEADER);
            for r in &rows {
                writeln!(s, "{}", r.csv_row()).expect("string write");
            }
            s
        }
    };
    let violation = (!passed).then(|| "a sharpness row falls outside its bracket".to_string());
    Ok(Outcome { text, passed, violation })
}

/// A `DiskPolynomial` document, or a pole-set document read as the zeros of a monic polynomial.
fn load_polynomial(path: &Path) -> Result<DiskPolynomial, Failure> {
    let text = read_input(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let bad = |e: String| Failure::Input(format!("{}: {e}", path.display()));
    if value.get("zeros").is_some() {
        DiskPolynomial::from_json(&text).map_err(|e| bad(e.to_string()))
    } else {
        let poles = PoleSet::from_json(&text).map_err(|e| bad(e.to_string()))?;
        DiskPolynomial::monic(poles.points().collect::<Vec<ComplexPoint>>()).map_err(|e| bad(e.to_string()))
    }
}

fn cmd_norms(path: &Path, delta: f64, format: Format) -> Result<Outcome, Failure> {
    let poly = load_polynomial(path)?;
    let n = poly.degree();
    let cor1 = verify_cor1(&poly);
    let cor2 = verify_cor2(&poly);
    let plus = endpoint_ratio(&poly, 1.0).ok();
    let minus = endpoint_ratio(&poly, -1.0).ok();
    let g = g_delta_positivity(&poly, delta).map_err(|e| Failure::Input(e.to_string()))?;
    let half = n as f64 / 2.0 - 1e-9;
    let endpoints_ok = plus.is_none_or(|r| r >= half) && minus.is_none_or(|r| r >= half);
    let passed = cor1.holds && cor2.holds && endpoints_ok && g.holds;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let text = match format {
        Format::Json => to_json(&json!({
            "n": n,
            "corollary1": cor1,
            "corollary2": cor2,
            "endpointRatioPlus": plus,
            "endpointRatioMinus": minus,
            "gDelta": g,
            "allPassed": passed,
        })),
        Format::Csv => format!(
            "n,norm,derivative_norm,ratio,cor1_bound,cor2_bound,cor1,cor2,endpoint_plus,endpoint_minus,g_minus,g_plus,g_holds\n{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            n,
            cor1.norm,
            cor1.derivative_norm,
            cor1.ratio,
            cor1.bound,
            cor2.bound,
            cor1.holds,
            cor2.holds,
            opt(plus),
            opt(minus),
            g.measure_minus,
            g.measure_plus,
            g.holds
        ),
    };
    let violation = (!passed).then(|| "a polynomial inequality fails".to_string());
    Ok(Outcome { text, passed, violation })
}

struct ExploreArgs {
    n: usize,
    objective: ObjectiveArg,
    p: f64,
    seeds: usize,
    budget: usize,
    tol: f64,
    timing: bool,
}

fn cmd_explore(args: &ExploreArgs, common: &Common) -> Result<Outcome, Failure> {
    let kind = match args.objective {
        ObjectiveArg::Area => ObjectiveKind::AreaIntegral,
        ObjectiveArg::Lp => ObjectiveKind::LpMeanUnweighted(args.p),
        ObjectiveArg::Lpw => ObjectiveKind::LpMeanWeighted(args.p),
    };
    if !(args.tol > 0.0 && args.tol <= 1e-2) {
        return Err(Failure::Input(format!("tol must lie in (0, 1e-2], got {}", args.tol)));
    }
    let obj = Objective { kind, tolerance: args.tol };
    let cfg = SearchConfig::new(args.seeds, args.budget, common.seed);
    let mut record: StudyRecord = optimize_lenient(args.n, &obj, &cfg)?;
    if !args.timing {
        record.wall_time = 0.0;
    }
    if let Some(out) = &common.out {
        let sidecar = PathBuf::from(format!("{}.angles.json", out.display()));
        let best = PoleSet::new(record.best_angles.clone()).map_err(|e| Failure::Numerics(e.to_string()))?;
        fs::write(&sidecar, format!("{}\n", best.to_json()))
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", sidecar.display())))?;
    }
    let counterexample = kind == ObjectiveKind::AreaIntegral && record.gap < -1e-4;
    let passed = record.bound_violations == 0 && !counterexample;
    let text = match common.format {
        Format::Json => to_json(&record),
        Format::Csv => format!("{}\n{}\n", StudyRecord::CSV_HEADER, record.csv_row(args.timing)),
    };
    let violation = (!passed).then(|| {
        if counterexample {
            format!("configuration beats equally spaced poles by {} (n = {})", -record.gap, record.n)
        } else {
            format!("{} visited configurations violate the lower bound", record.bound_violations)
        }
    });
    Ok(Outcome { text, passed, violation })
}

fn run(cli: Cli) -> Result<Outcome, Failure> {
    let common = match &cli.command {
        Command::Verify { common, .. }
        | Command::Witness { common, .. }
        | Command::Measure { common, .. }
        | Command::Sharpness { common, .. }
        | Command::Norms { common, .. }
        | Command::Explore { common, .. } => common.clone(),
    };
    check_out(&common.out)?;
    let outcome = match cli.command {
        Command::Verify { poles, p, delta, tol, .. } => cmd_verify(&poles, p, delta, tol, common.format)?,
        Command::Witness { poles, delta, m, samples, .. } => cmd_witness(&poles, delta, m, samples, common.format)?,
        Command::Measure { poles, delta, .. } => cmd_measure(&poles, delta, common.format)?,
        Command::Sharpness { n, p, samples, .. } => cmd_sharpness(n, p, samples, common.seed, common.format)?,
        Command::Norms { poles, delta, .. } => cmd_norms(&poles, delta, common.format)?,
        Command::Explore { n, objective, p, seeds, budget, tol, timing, .. } => {
            cmd_explore(&ExploreArgs { n, objective, p, seeds, budget, tol, timing }, &common)?
        }
    };
    match &common.out {
        Some(path) => fs::write(path, &outcome.text)
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{}", outcome.text),
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) if outcome.passed => ExitCode::SUCCESS,
        Ok(outcome) => {
            eprintln!("!!! VIOLATION FOUND: {}", outcome.violation.unwrap_or_default());
            ExitCode::from(1)
        }
        Err(f) => {
            match &f {
                Failure::Input(m) => eprintln!("error: {m}"),
                Failure::Numerics(m) => eprintln!("numerical failure: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
