//! Multistart Nelder–Mead search over pole configurations for the area
//! integral and the `L_p` means, with equally spaced poles as the reference.

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extremal::{ctilde, lp_mean_gtilde};
use crate::poles::{normalize_angle, PoleSet};
use crate::quadrature::{
    area_integral_with, c_p, lp_mean, theorem1_check_with, AreaSpec, MeanSpec, QuadratureError,
};

/// Quadrature tolerance used while searching.
pub const SEARCH_TOL: f64 = 1e-6;
/// Quadrature tolerance for the reported incumbent and reference.
pub const FINAL_TOL: f64 = 1e-9;
/// Every this-many evaluations the visited configuration is checked against the lower bound.
pub const BOUND_CHECK_EVERY: usize = 100;
/// Initial simplex edge, in radians.
const SIMPLEX_STEP: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ObjectiveKind {
    AreaIntegral,
    LpMeanUnweighted(f64),
    LpMeanWeighted(f64),
}

impl ObjectiveKind {
    pub fn label(&self) -> String {
        match self {
            ObjectiveKind::AreaIntegral => "area".into(),
            ObjectiveKind::LpMeanUnweighted(p) => format!("lp_unweighted(p={p})"),
            ObjectiveKind::LpMeanWeighted(p) => format!("lp_weighted(p={p})"),
        }
    }

    fn exponent(&self) -> f64 {
        match self {
            ObjectiveKind::AreaIntegral => 1.0,
            ObjectiveKind::LpMeanUnweighted(p) | ObjectiveKind::LpMeanWeighted(p) => *p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub kind: ObjectiveKind,
    pub tolerance: f64,
}

impl Objective {
    pub fn new(kind: ObjectiveKind) -> Self {
        Self { kind, tolerance: SEARCH_TOL }
    }

    /// The objective value at `rel_tol`; divergent means give `+inf`.
    /// An unconverged quadrature returns its partial value and `false`.
    pub fn evaluate(&self, poles: &PoleSet, rel_tol: f64) -> Result<(f64, bool), QuadratureError> {
        let r = match self.kind {
            ObjectiveKind::AreaIntegral => area_integral_with(poles, &AreaSpec { rel_tol, ..AreaSpec::default() }),
            ObjectiveKind::LpMeanUnweighted(p) => lp_mean(poles, &MeanSpec::new(p, false).with_tol(rel_tol)),
            ObjectiveKind::LpMeanWeighted(p) => lp_mean(poles, &MeanSpec::new(p, true).with_tol(rel_tol)),
        };
        match r {
            Ok(r) => Ok((r.value, true)),
            Err(QuadratureError::ToleranceNotMet { partial }) => Ok((partial.value, false)),
            Err(e) => Err(e),
        }
    }
}

#[derive(Debug, Error)]
pub enum ExplorerError {
    #[error("invalid search parameters: {0}")]
    Invalid(String),
    #[error("evaluation budget exhausted before every start converged")]
    BudgetExhausted(Box<StudyRecord>),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StudyRecord {
    pub n: usize,
    pub objective: String,
    pub best_value: f64,
    pub best_angles: Vec<f64>,
    pub reference_value: f64,
    pub gap: f64,
    pub seeds: usize,
    pub evaluations: usize,
    pub wall_time: f64,
    pub converged_starts: usize,
    pub unconverged_quadratures: usize,
    pub bound_checks: usize,
    pub bound_violations: usize,
}

impl StudyRecord {
    pub const CSV_HEADER: &'static str = "n,objective,best_value,reference_value,gap,seeds,evals,seconds";

    /// One CSV row; `seconds` is left empty unless `with_time` is set so
    /// that repeated runs produce identical bytes.
    pub fn csv_row(&self, with_time: bool) -> String {
        let seconds = if with_time { format!("{:.3}", self.wall_time) } else { String::new() };
        format!(
            "{},\"{}\",{},{},{},{},{},{}",
            self.n, self.objective, self.best_value, self.reference_value, self.gap, self.seeds, self.evaluations, seconds
        )
    }
}

/// `z_k = e^{2 pi i k / n}`, `k = 1..n`.
pub fn equally_spaced(n: usize) -> PoleSet {
    PoleSet::new((1..=n).map(|k| TAU * ((k % n) as f64 / n as f64)).collect()).expect("n >= 1")
}

/// Sorted angles of the configuration or of its conjugate, whichever is
/// lexicographically smaller.
pub fn canonical_angles(angles: &[f64]) -> Vec<f64> {
    let sorted = |it: Vec<f64>| {
        let mut v = it;
        v.sort_by(f64::total_cmp);
        v
    };
    let a = sorted(angles.iter().map(|&t| normalize_angle(t)).collect());
    let b = sorted(angles.iter().map(|&t| normalize_angle(-t)).collect());
    match a.iter().zip(&b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()) {
        Some(std::cmp::Ordering::Greater) => b,
        _ => a,
    }
}

/// Result of one Nelder–Mead run.
#[derive(Debug, Clone)]
pub struct LocalMin {
    pub point: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Standard Nelder–Mead (reflection 1, expansion 2, contraction and shrink 1/2).
/// Converges when the spread of simplex values is below
/// `ftol * max(|f_best|, 1e-300)` and every edge from the best vertex is below `xtol`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    start: &[f64],
    step: f64,
    ftol: f64,
    xtol: f64,
    budget: usize,
) -> LocalMin {
    let d = start.len();
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    if d == 0 {
        let value = eval(start, &mut evals);
        return LocalMin { point: Vec::new(), value, evaluations: evals, converged: true };
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    let v0 = eval(start, &mut evals);
    simplex.push((start.to_vec(), v0));
    for i in 0..d {
        let mut x = start.to_vec();
        x[i] += step;
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }
    let mut converged = false;
    while evals < budget {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[d].1;
        let spread = worst - best;
        let size = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= ftol * best.abs().max(1e-300) && size <= xtol {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..d).map(|i| simplex[..d].iter().map(|(x, _)| x[i]).sum::<f64>() / d as f64).collect();
        let toward = |t: f64, from: &[f64]| -> Vec<f64> {
            centroid.iter().zip(from).map(|(c, w)| c + t * (w - c)).collect()
        };
        let worst_x = simplex[d].0.clone();
        let xr = toward(-1.0, &worst_x);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = toward(-2.0, &worst_x);
            let fe = eval(&xe, &mut evals);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst {
                let xc = toward(-0.5, &worst_x);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = toward(0.5, &worst_x);
                let fc = eval(&xc, &mut evals);
                (xc, fc)
            };
            if fc < worst.min(fr) {
                simplex[d] = (xc, fc);
            } else {
                let x0 = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = x0.iter().zip(&vertex.0).map(|(a, b)| a + 0.5 * (b - a)).collect();
                    let v = eval(&x, &mut evals);
                    *vertex = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (point, value) = simplex.swap_remove(0);
    LocalMin { point, value, evaluations: evals, converged }
}

/// Search parameters beyond the objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    pub seeds: usize,
    pub budget: usize,
    pub seed: u64,
    /// Fixed first angle for the area objective.
    pub gauge: f64,
}

impl SearchConfig {
    pub fn new(seeds: usize, budget: usize, seed: u64) -> Self {
        Self { seeds, budget, seed, gauge: 0.0 }
    }
}

struct StartOutcome {
    value: f64,
    angles: Vec<f64>,
    evaluations: usize,
    converged: bool,
    unconverged: usize,
    checks: usize,
    violations: usize,
}

fn run_start(n: usize, obj: &Objective, cfg: &SearchConfig, index: usize, budget: usize) -> StartOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let area = obj.kind == ObjectiveKind::AreaIntegral;
    let dim = if area { n - 1 } else { n };
    let start: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.0..TAU)).collect();
    let to_angles = |x: &[f64]| -> Vec<f64> {
        if area {
            std::iter::once(cfg.gauge).chain(x.iter().copied()).collect()
        } else {
            x.to_vec()
        }
    };
    let mut unconverged = 0;
    let mut checks = 0;
    let mut violations = 0;
    let mut count = 0;
    let p = obj.kind.exponent();
    let local = nelder_mead(
        |x| {
            let poles = PoleSet::new(to_angles(x)).expect("finite angles");
            count += 1;
            let (v, ok) = obj.evaluate(&poles, obj.tolerance).unwrap_or((f64::INFINITY, false));
            if !ok {
                unconverged += 1;
            }
            if area && v <= PI / 192.0 {
                violations += 1;
            }
            if count % BOUND_CHECK_EVERY == 1 {
                checks += 1;
                match theorem1_check_with(&poles, p, obj.tolerance) {
                    Ok(r) if !r.holds() => violations += 1,
                    Ok(_) | Err(_) => {}
                }
            }
            v
        },
        &start,
        SIMPLEX_STEP,
        obj.tolerance,
        1e-6,
        budget,
    );
    StartOutcome {
        value: local.value,
        angles: to_angles(&local.point),
        evaluations: local.evaluations,
        converged: local.converged,
        unconverged,
        checks,
        violations,
    }
}

/// Multistart search; the incumbent and the equally spaced reference are
/// re-evaluated at `FINAL_TOL`.
pub fn optimize(n: usize, obj: &Objective, cfg: &SearchConfig) -> Result<StudyRecord, ExplorerError> {
    if n == 0 {
        return Err(ExplorerError::Invalid("n must be at least 1".into()));
    }
    if cfg.seeds == 0 {
        return Err(ExplorerError::Invalid("at least one seed is required".into()));
    }
    if cfg.budget < 100 {
        return Err(ExplorerError::Invalid(format!("budget must be at least 100, got {}", cfg.budget)));
    }
    if let ObjectiveKind::LpMeanUnweighted(p) | ObjectiveKind::LpMeanWeighted(p) = obj.kind {
        if !(p > 0.0 && p.is_finite()) {
            return Err(ExplorerError::Invalid(format!("p must be positive, got {p}")));
        }
    }
    let started = Instant::now();
    let per_start = (cfg.budget / cfg.seeds).max(1);
    let outcomes: Vec<StartOutcome> =
        (0..cfg.seeds).into_par_iter().map(|i| run_start(n, obj, cfg, i, per_start)).collect();
    let best = outcomes
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value).then(a.0.cmp(&b.0)))
        .map(|(_, o)| o)
        .expect("at least one start");

    let best_poles = PoleSet::new(best.angles.clone()).expect("finite angles");
    let (mut best_value, ok_best) = obj.evaluate(&best_poles, FINAL_TOL)?;
    let (reference_value, ok_ref) = obj.evaluate(&equally_spaced(n), FINAL_TOL)?;
    // The record must not report a best value above any evaluated candidate.
    best_value = best_value.min(best.value);
    let best_angles = if obj.kind == ObjectiveKind::AreaIntegral {
        best_poles.angles().to_vec()
    } else {
        canonical_angles(best_poles.angles())
    };
    let record = StudyRecord {
        n,
        objective: obj.kind.label(),
        best_value,
        best_angles,
        reference_value,
        gap: best_value - reference_value,
        seeds: cfg.seeds,
        evaluations: outcomes.iter().map(|o| o.evaluations).sum::<usize>() + 2,
        wall_time: started.elapsed().as_secs_f64(),
        converged_starts: outcomes.iter().filter(|o| o.converged).count(),
        unconverged_quadratures: outcomes.iter().map(|o| o.unconverged).sum::<usize>()
            + usize::from(!ok_best)
            + usize::from(!ok_ref),
        bound_checks: outcomes.iter().map(|o| o.checks).sum(),
        bound_violations: outcomes.iter().map(|o| o.violations).sum(),
    };
    if record.converged_starts < cfg.seeds {
        return Err(ExplorerError::BudgetExhausted(Box::new(record)));
    }
    Ok(record)
}

/// The record, whether or not every start converged.
pub fn optimize_lenient(n: usize, obj: &Objective, cfg: &SearchConfig) -> Result<StudyRecord, ExplorerError> {
    match optimize(n, obj, cfg) {
        Err(ExplorerError::BudgetExhausted(r)) => Ok(*r),
        other => other,
    }
}

/// One row of the order-sharpness table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SharpnessRow {
    pub n: usize,
    pub lower: f64,
    pub gtilde: f64,
    pub upper: f64,
    pub random_min: f64,
}

impl SharpnessRow {
    pub const CSV_HEADER: &'static str = "n,lower,gtilde,upper,random_min";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{},{}", self.n, self.lower, self.gtilde, self.upper, self.random_min)
    }

    /// `lower < gtilde <= upper` and `lower <= random_min`.
    pub fn brackets(&self) -> bool {
        self.lower < self.gtilde && self.gtilde <= self.upper * (1.0 + 1e-10) && self.lower <= self.random_min
    }
}

/// Rows `n = 1..=n_max` of `C_p n^(p-1)`, the extremal mean, `C~_p n^(p-1)`
/// and the smallest unweighted mean among `samples` seeded random configurations.
pub fn sharpness_table(n_max: usize, p: f64, samples: usize, seed: u64) -> Result<Vec<SharpnessRow>, ExplorerError> {
    if n_max == 0 || n_max > 16 {
        return Err(ExplorerError::Invalid(format!("nMax must lie in 1..=16, got {n_max}")));
    }
    if samples == 0 {
        return Err(ExplorerError::Invalid("at least one random sample is required".into()));
    }
    let upper_const = ctilde(p)?;
    (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let scale = (n as f64).powf(p - 1.0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(n as u64);
            let mut random_min = f64::INFINITY;
            for _ in 0..samples {
                let poles = PoleSet::random(n, &mut rng);
                let r = match lp_mean(&poles, &MeanSpec::new(p, false).with_tol(SEARCH_TOL)) {
                    Ok(r) => r.value,
                    Err(QuadratureError::ToleranceNotMet { partial }) => partial.value,
                    Err(e) => return Err(e.into()),
                };
                random_min = random_min.min(r);
            }
            Ok(SharpnessRow {
                n,
                lower: c_p(p) * scale,
                gtilde: lp_mean_gtilde(n, p)?,
                upper: upper_const * scale,
                random_min,
            })
        })
        .collect()
}
