//! `L_p` means of `|g_n|` and `|x g_n(x)|` on `[-1, 1]`, and the area
//! integral of `|g_n|` over the unit disk.
//!
//! The base rule is the 15-point Gauss–Kronrod pair with global adaptive
//! bisection. Initial panels break at `0`, at every `Re z_k` and along a
//! geometric grid toward each `Re z_k` whose spacing bottoms out at
//! `|Im z_k|`. An integrable endpoint singularity from a pole at `+-1` is
//! removed by the substitution `x = +-1 -/+ u^q` with `q = 1 / (1 - p)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::pairwise_sum;
use crate::poles::PoleSet;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Smallest spacing of the geometric grid toward a near-real pole.
pub const GRADING_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub divergent: bool,
    pub panels: usize,
    pub function_evals: usize,
}

impl QuadratureResult {
    pub fn divergent() -> Self {
        Self {
            value: f64::INFINITY,
            error_estimate: f64::INFINITY,
            divergent: true,
            panels: 0,
            function_evals: 0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("tolerance not met: value {} with error estimate {} after {} panels", partial.value, partial.error_estimate, partial.panels)]
    ToleranceNotMet { partial: QuadratureResult },
    #[error("invalid quadrature parameters: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MeanSpec {
    pub p: f64,
    pub weighted: bool,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl MeanSpec {
    pub fn new(p: f64, weighted: bool) -> Self {
        Self { p, weighted, rel_tol: 1e-8, max_panels: 200_000 }
    }

    pub fn with_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_max_panels(mut self, max_panels: usize) -> Self {
        self.max_panels = max_panels;
        self
    }

    pub fn validate(&self) -> Result<(), QuadratureError> {
        if !(self.p.is_finite() && self.p > 0.0) {
            return Err(QuadratureError::InvalidSpec(format!("p must be positive, got {}", self.p)));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-2) {
            return Err(QuadratureError::InvalidSpec(format!("relTol must lie in (0, 1e-2], got {}", self.rel_tol)));
        }
        if self.max_panels == 0 {
            return Err(QuadratureError::InvalidSpec("maxPanels must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of the adaptive engine before it is turned into a result or an error.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Adaptive {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
    pub evals: usize,
    pub converged: bool,
}

impl Adaptive {
    pub(crate) fn into_result(self) -> Result<QuadratureResult, QuadratureError> {
        let r = QuadratureResult {
            value: self.value,
            error_estimate: self.error,
            divergent: false,
            panels: self.panels,
            function_evals: self.evals,
        };
        if self.converged {
            Ok(r)
        } else {
            Err(QuadratureError::ToleranceNotMet { partial: r })
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    segment: usize,
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.segment.cmp(&self.segment))
            .then_with(|| other.lo.total_cmp(&self.lo))
    }
}

fn gk_nodes(lo: f64, hi: f64) -> [f64; 15] {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let mut x = [c; 15];
    for j in 0..7 {
        x[2 * j] = c - h * XGK[j];
        x[2 * j + 1] = c + h * XGK[j];
    }
    x
}

/// Kronrod value and QUADPACK error estimate from the 15 node values.
fn gk_combine(lo: f64, hi: f64, f: &[f64; 15]) -> (f64, f64) {
    let h = 0.5 * (hi - lo);
    let fc = f[14];
    let mut resk = WGK[7] * fc;
    let mut resg = WG[3] * fc;
    let mut resabs = resk.abs();
    for j in 0..7 {
        let s = f[2 * j] + f[2 * j + 1];
        resk += WGK[j] * s;
        resabs += WGK[j] * (f[2 * j].abs() + f[2 * j + 1].abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * s;
        }
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((f[2 * j] - mean).abs() + (f[2 * j + 1] - mean).abs());
    }
    let value = resk * h;
    resabs *= h.abs();
    resasc *= h.abs();
    let mut err = ((resk - resg) * h).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    if !value.is_finite() {
        err = f64::INFINITY;
    }
    (value, err)
}

fn eval_panels<F>(f: &F, pieces: &[(usize, f64, f64)], parallel: bool) -> Vec<Panel>
where
    F: Fn(usize, f64) -> f64 + Sync,
{
    let nodes: Vec<(usize, f64)> = pieces
        .iter()
        .flat_map(|&(s, lo, hi)| gk_nodes(lo, hi).into_iter().map(move |x| (s, x)))
        .collect();
    let values: Vec<f64> = if parallel {
        nodes.par_iter().map(|&(s, x)| f(s, x)).collect()
    } else {
        nodes.iter().map(|&(s, x)| f(s, x)).collect()
    };
    pieces
        .iter()
        .zip(values.chunks_exact(15))
        .map(|(&(segment, lo, hi), v)| {
            let (value, error) = gk_combine(lo, hi, v.try_into().expect("chunk of 15"));
            Panel { segment, lo, hi, value, error }
        })
        .collect()
}

/// Global adaptive Gauss–Kronrod over `segments`, where `f(s, u)` is the
/// integrand on segment `s` in that segment's own variable.
///
/// Converged means `sum(error) <= max(rel_tol * |sum(value)|, abs_tol)`.
/// Final sums are pairwise over panels sorted by segment and left endpoint,
/// so the result depends only on the panel tree.
pub(crate) fn adaptive<F>(
    f: &F,
    segments: &[(f64, f64)],
    rel_tol: f64,
    abs_tol: f64,
    max_panels: usize,
    parallel: bool,
) -> Adaptive
where
    F: Fn(usize, f64) -> f64 + Sync,
{
    let pieces: Vec<(usize, f64, f64)> = segments
        .iter()
        .enumerate()
        .filter(|(_, &(lo, hi))| hi > lo)
        .map(|(s, &(lo, hi))| (s, lo, hi))
        .collect();
    let mut evals = 15 * pieces.len();
    let mut heap: BinaryHeap<Panel> = eval_panels(f, &pieces, parallel).into_iter().collect();
    let mut done: Vec<Panel> = Vec::new();
    let mut total: f64 = heap.iter().map(|p| p.value).sum();
    let mut err: f64 = heap.iter().map(|p| p.error).sum();
    let mut converged = false;

    loop {
        if !(total.is_finite() && err.is_finite()) {
            break;
        }
        if err <= (rel_tol * total.abs()).max(abs_tol) {
            converged = true;
            break;
        }
        if heap.len() + done.len() >= max_panels {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.lo + worst.hi);
        if !(worst.lo < mid && mid < worst.hi) || worst.hi - worst.lo <= 8.0 * f64::EPSILON * mid.abs().max(1e-300) {
            done.push(worst);
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let halves = eval_panels(f, &[(worst.segment, worst.lo, mid), (worst.segment, mid, worst.hi)], parallel);
        evals += 30;
        total += halves[0].value + halves[1].value - worst.value;
        err += halves[0].error + halves[1].error - worst.error;
        heap.extend(halves);
        // Refresh the running sums now and then to stop drift.
        if (heap.len() + done.len()).is_multiple_of(1024) {
            total = heap.iter().chain(&done).map(|p| p.value).sum();
            err = heap.iter().chain(&done).map(|p| p.error).sum();
        }
    }

    let mut all: Vec<Panel> = heap.into_vec();
    all.extend(done);
    all.sort_by(|a, b| a.segment.cmp(&b.segment).then(a.lo.total_cmp(&b.lo)));
    let values: Vec<f64> = all.iter().map(|p| p.value).collect();
    let errors: Vec<f64> = all.iter().map(|p| p.error).collect();
    let value = pairwise_sum(&values);
    let error = pairwise_sum(&errors);
    if !converged && value.is_finite() && error <= (rel_tol * value.abs()).max(abs_tol) {
        converged = true;
    }
    Adaptive { value, error, panels: all.len(), evals, converged }
}

/// `|sum_k 1/(x - z_k)|`, with `x - c` replaced by the exact offset `d` for
/// the real poles located at `c` when `endpoint = Some((c, d))`.
fn abs_logderiv(points: &[(Complex64, bool)], x: f64, endpoint: Option<(f64, f64)>) -> f64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for &(z, real) in points {
        let dx = match endpoint {
            Some((c, d)) if real && z.re == c => d,
            _ => x - z.re,
        };
        let b = if real { 0.0 } else { z.im };
        let d2 = dx * dx + b * b;
        re += dx / d2;
        im += b / d2;
    }
    re.hypot(im)
}

/// Initial breakpoints on `[-1, 1]` for the poles of `poles`.
fn breakpoints(poles: &PoleSet) -> Vec<f64> {
    let mut b = vec![-1.0, 0.0, 1.0];
    for (k, z) in poles.points().enumerate() {
        if poles.is_real_pole(k) {
            continue;
        }
        let (a, s) = (z.re, z.im.abs());
        b.push(a);
        b.push(a - s);
        b.push(a + s);
        let floor = s.max(GRADING_FLOOR);
        let mut step = 0.5;
        while step > floor {
            b.push(a - step);
            b.push(a + step);
            step *= 0.5;
        }
    }
    b.retain(|x| (-1.0..=1.0).contains(x));
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// How each initial segment maps its own variable `u` to `x`.
#[derive(Debug, Clone, Copy)]
enum SegmentMap {
    Identity,
    /// `x = c - sign * u^q` so that `x - c = -sign * u^q` exactly.
    Power { c: f64, sign: f64, q: f64 },
}

/// `int_{-1}^{1} |g_n(x)|^p dx` or `int |x g_n(x)|^p dx`.
pub fn lp_mean(poles: &PoleSet, spec: &MeanSpec) -> Result<QuadratureResult, QuadratureError> {
    spec.validate()?;
    lp_mean_engine(poles, spec, false)
}

fn lp_mean_engine(poles: &PoleSet, spec: &MeanSpec, parallel: bool) -> Result<QuadratureResult, QuadratureError> {
    let p = spec.p;
    let has_plus = poles.real_poles().iter().any(|&k| poles.point(k).re > 0.0);
    let has_minus = poles.real_poles().iter().any(|&k| poles.point(k).re < 0.0);
    if (has_plus || has_minus) && p >= 1.0 {
        return Ok(QuadratureResult::divergent());
    }
    let points: Vec<(Complex64, bool)> = poles.points().enumerate().map(|(k, z)| (z, poles.is_real_pole(k))).collect();
    let b = breakpoints(poles);
    let q = 1.0 / (1.0 - p);
    let last = b.len() - 2;
    let mut segments = Vec::with_capacity(b.len() - 1);
    let mut maps = Vec::with_capacity(b.len() - 1);
    for (i, w) in b.windows(2).enumerate() {
        let (lo, hi) = (w[0], w[1]);
        if i == 0 && has_minus {
            // x = -1 + u^q on [0, (hi + 1)^(1/q)].
            segments.push((0.0, (hi + 1.0).powf(1.0 / q)));
            maps.push(SegmentMap::Power { c: -1.0, sign: -1.0, q });
        } else if i == last && has_plus {
            // x = 1 - u^q on [0, (1 - lo)^(1/q)].
            segments.push((0.0, (1.0 - lo).powf(1.0 / q)));
            maps.push(SegmentMap::Power { c: 1.0, sign: 1.0, q });
        } else {
            segments.push((lo, hi));
            maps.push(SegmentMap::Identity);
        }
    }
    let weighted = spec.weighted;
    let integrand = |s: usize, u: f64| -> f64 {
        match maps[s] {
            SegmentMap::Identity => {
                let g = abs_logderiv(&points, u, None);
                let v = if weighted { u.abs() * g } else { g };
                v.powf(p)
            }
            SegmentMap::Power { c, sign, q } => {
                let d = u.powf(q);
                let x = c - sign * d;
                let g = abs_logderiv(&points, x, Some((c, -sign * d)));
                let v = if weighted { x.abs() * g } else { g };
                v.powf(p) * q * u.powf(q - 1.0)
            }
        }
    };
    adaptive(&integrand, &segments, spec.rel_tol, 0.0, spec.max_panels, parallel).into_result()
}

/// Tolerances for the nested area integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AreaSpec {
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for AreaSpec {
    fn default() -> Self {
        Self { rel_tol: 1e-6, max_panels: 20_000 }
    }
}

/// `iint_{|z|<1} |g_n| dx dy = int_0^pi dt int_{-1}^{1} |r g_n(r e^{it})| dr`.
///
/// The inner integral at angle `t` is the weighted `L_1` mean of the poles
/// rotated by `-t`; the outer integrand has logarithmic peaks at
/// `t = arg z_k mod pi`, which are used as breakpoints.
pub fn area_integral(poles: &PoleSet) -> Result<QuadratureResult, QuadratureError> {
    area_integral_with(poles, &AreaSpec::default())
}

pub fn area_integral_with(poles: &PoleSet, spec: &AreaSpec) -> Result<QuadratureResult, QuadratureError> {
    if !(spec.rel_tol > 0.0 && spec.rel_tol <= 1e-2) || spec.max_panels == 0 {
        return Err(QuadratureError::InvalidSpec(format!("bad area tolerance {spec:?}")));
    }
    let inner = MeanSpec::new(1.0, true).with_tol((spec.rel_tol / 10.0).max(1e-13));
    let mut b: Vec<f64> = vec![0.0, PI];
    b.extend(poles.angles().iter().map(|t| t.rem_euclid(PI)));
    b.sort_by(f64::total_cmp);
    b.dedup();
    let segments: Vec<(f64, f64)> = b.windows(2).map(|w| (w[0], w[1])).collect();
    let inner_failed = std::sync::atomic::AtomicBool::new(false);
    let inner_evals = std::sync::atomic::AtomicUsize::new(0);
    let outer = |_: usize, t: f64| -> f64 {
        let rotated = poles.rotate(-t);
        let r = match lp_mean_engine(&rotated, &inner, false) {
            Ok(r) => r,
            Err(QuadratureError::ToleranceNotMet { partial }) => {
                inner_failed.store(true, std::sync::atomic::Ordering::Relaxed);
                partial
            }
            Err(e) => unreachable!("inner spec is valid: {e}"),
        };
        inner_evals.fetch_add(r.function_evals, std::sync::atomic::Ordering::Relaxed);
        r.value
    };
    let mut a = adaptive(&outer, &segments, spec.rel_tol, 0.0, spec.max_panels, true);
    a.evals += inner_evals.into_inner();
    if inner_failed.into_inner() {
        a.converged = false;
    }
    a.into_result()
}

/// `C_p = 3 p^p (p + 1)^(1 - p) / (2^(p + 5) (1 + 2p)^2)`.
pub fn c_p(p: f64) -> f64 {
    3.0 * p.powf(p) * (p + 1.0).powf(1.0 - p) / (2f64.powf(p + 5.0) * (1.0 + 2.0 * p).powi(2))
}

/// Both means of the lower bound and their verdicts.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Theorem1Report {
    pub p: f64,
    pub n: usize,
    pub unweighted: QuadratureResult,
    pub weighted: QuadratureResult,
    pub bound: f64,
    pub unweighted_ge_weighted: bool,
    pub weighted_ge_bound: bool,
}

impl Theorem1Report {
    pub fn holds(&self) -> bool {
        self.unweighted_ge_weighted && self.weighted_ge_bound
    }
}

/// `a >= b` up to the quadrature tolerance; `+inf` dominates everything.
fn ge_with_tol(a: &QuadratureResult, b: f64, rel_tol: f64) -> bool {
    a.divergent || a.value > b - 10.0 * rel_tol * b.abs()
}

pub fn theorem1_check(poles: &PoleSet, p: f64) -> Result<Theorem1Report, QuadratureError> {
    theorem1_check_with(poles, p, 1e-8)
}

pub fn theorem1_check_with(poles: &PoleSet, p: f64, rel_tol: f64) -> Result<Theorem1Report, QuadratureError> {
    let unweighted = lp_mean(poles, &MeanSpec::new(p, false).with_tol(rel_tol))?;
    let weighted = lp_mean(poles, &MeanSpec::new(p, true).with_tol(rel_tol))?;
    let n = poles.len();
    let bound = c_p(p) * (n as f64).powf(p - 1.0);
    let unweighted_ge_weighted = if weighted.divergent {
        unweighted.divergent
    } else {
        ge_with_tol(&unweighted, weighted.value, rel_tol)
    };
    Ok(Theorem1Report {
        p,
        n,
        bound,
        unweighted_ge_weighted,
        weighted_ge_bound: ge_with_tol(&weighted, bound, rel_tol),
        unweighted,
        weighted,
    })
}
