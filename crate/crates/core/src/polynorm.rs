//! Chebyshev norms on `[-1, 1]` of polynomials whose zeros lie in the closed
//! unit disk, and the derivative bounds that follow from the level-set
//! estimates.
//!
//! Polynomials are kept as a leading coefficient and a list of zeros and are
//! evaluated as products; coefficients are never expanded.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poles::ComplexPoint;
use crate::quadrature::{adaptive, QuadratureError, QuadratureResult};

/// Zeros may exceed the unit circle by this much, and imaginary parts this
/// small are snapped to zero.
pub const DISK_SNAP: f64 = 1e-14;

/// Golden-section refinement stops at this bracket width.
const REFINE_WIDTH: f64 = 1e-12;

/// Samples per half interval in the `G_delta` estimate.
pub const G_DELTA_SAMPLES: usize = 4096;

#[derive(Debug, Error)]
pub enum PolyNormError {
    #[error("a polynomial needs at least one zero")]
    NoZeros,
    #[error("leading coefficient must be a nonzero finite number")]
    BadLeading,
    #[error("zero #{index} = {value} lies outside the closed unit disk")]
    OutsideDisk { index: usize, value: ComplexPoint },
    #[error("zero #{index} is not finite")]
    NonFinite { index: usize },
    #[error("p vanishes at the endpoint {0}")]
    ZeroAtEndpoint(f64),
    #[error("parameter out of range: {0}")]
    Domain(String),
    #[error("malformed polynomial document: {0}")]
    Json(#[from] serde_json::Error),
}

/// `p(z) = leading * prod (z - zeros[k])` with every zero in `|z| <= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyDoc", into = "PolyDoc")]
pub struct DiskPolynomial {
    leading: ComplexPoint,
    zeros: Vec<ComplexPoint>,
}

#[derive(Serialize, Deserialize)]
struct PolyDoc {
    leading: ComplexPoint,
    zeros: Vec<ComplexPoint>,
}

impl TryFrom<PolyDoc> for DiskPolynomial {
    type Error = PolyNormError;

    fn try_from(doc: PolyDoc) -> Result<Self, Self::Error> {
        DiskPolynomial::new(doc.leading, doc.zeros)
    }
}

impl From<DiskPolynomial> for PolyDoc {
    fn from(p: DiskPolynomial) -> Self {
        PolyDoc { leading: p.leading, zeros: p.zeros }
    }
}

impl DiskPolynomial {
    pub fn new(leading: ComplexPoint, zeros: Vec<ComplexPoint>) -> Result<Self, PolyNormError> {
        if zeros.is_empty() {
            return Err(PolyNormError::NoZeros);
        }
        if !(leading.re.is_finite() && leading.im.is_finite()) || leading == Complex64::new(0.0, 0.0) {
            return Err(PolyNormError::BadLeading);
        }
        let mut snapped = Vec::with_capacity(zeros.len());
        for (index, z) in zeros.into_iter().enumerate() {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(PolyNormError::NonFinite { index });
            }
            if z.norm() > 1.0 + DISK_SNAP {
                return Err(PolyNormError::OutsideDisk { index, value: z });
            }
            let im = if z.im.abs() <= DISK_SNAP { 0.0 } else { z.im };
            snapped.push(Complex64::new(z.re, im));
        }
        Ok(Self { leading, zeros: snapped })
    }

    /// Monic polynomial with the given zeros.
    pub fn monic(zeros: Vec<ComplexPoint>) -> Result<Self, PolyNormError> {
        Self::new(Complex64::new(1.0, 0.0), zeros)
    }

    /// Monic polynomial with `n` zeros drawn uniformly from the unit disk.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let zeros = (0..n)
            .map(|_| Complex64::from_polar(rng.gen::<f64>().sqrt(), rng.gen_range(0.0..2.0 * PI)))
            .collect();
        Self::monic(zeros).expect("random zeros lie in the disk")
    }

    pub fn from_json(text: &str) -> Result<Self, PolyNormError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("finite fields serialize")
    }

    pub fn degree(&self) -> usize {
        self.zeros.len()
    }

    pub fn zeros(&self) -> &[ComplexPoint] {
        &self.zeros
    }

    pub fn leading(&self) -> ComplexPoint {
        self.leading
    }

    pub fn eval(&self, x: f64) -> ComplexPoint {
        self.zeros.iter().fold(self.leading, |acc, &z| acc * (x - z))
    }

    /// `p'(x) = leading * sum_j prod_{k != j} (x - z_k)`, exact at the zeros.
    pub fn eval_derivative(&self, x: f64) -> ComplexPoint {
        let n = self.zeros.len();
        let mut suffix = vec![Complex64::new(1.0, 0.0); n + 1];
        for k in (0..n).rev() {
            suffix[k] = suffix[k + 1] * (x - self.zeros[k]);
        }
        let mut prefix = Complex64::new(1.0, 0.0);
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..n {
            acc += prefix * suffix[k + 1];
            prefix *= x - self.zeros[k];
        }
        self.leading * acc
    }

    /// `sum_k 1 / (x - z_k) = p'(x) / p(x)`.
    pub fn eval_logderiv(&self, x: f64) -> ComplexPoint {
        self.zeros.iter().map(|&z| (x - z).inv()).sum()
    }

    /// Sign counts of the imaginary parts of the zeros.
    pub fn zero_counts(&self) -> ZeroCounts {
        let mut c = ZeroCounts { n_plus: 0, n_minus: 0, n_zero: 0 };
        for z in &self.zeros {
            if z.im > 0.0 {
                c.n_plus += 1;
            } else if z.im < 0.0 {
                c.n_minus += 1;
            } else {
                c.n_zero += 1;
            }
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ZeroCounts {
    pub n_plus: usize,
    pub n_minus: usize,
    pub n_zero: usize,
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > REFINE_WIDTH {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// `sup_{[-1, 1]} f` for a nonnegative `f` of polynomial type of degree at
/// most `degree`: a scan over `8 (degree + 1)` Chebyshev points, then
/// golden-section refinement of every sampled local maximum.
pub fn cheb_norm_fn<F: Fn(f64) -> f64>(f: F, degree: usize) -> f64 {
    let count = 8 * (degree + 1);
    let xs: Vec<f64> = (0..count).map(|j| -(PI * j as f64 / (count - 1) as f64).cos()).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut best = ys[0].max(ys[count - 1]);
    for j in 1..count - 1 {
        if ys[j] >= ys[j - 1] && ys[j] >= ys[j + 1] {
            let (_, v) = golden_max(&f, xs[j - 1], xs[j + 1]);
            best = best.max(v).max(ys[j]);
        }
    }
    best
}

/// `||p||` on `[-1, 1]`.
pub fn cheb_norm(p: &DiskPolynomial) -> f64 {
    cheb_norm_fn(|x| p.eval(x).norm(), p.degree())
}

/// `||p'||` on `[-1, 1]`.
pub fn cheb_norm_derivative(p: &DiskPolynomial) -> f64 {
    cheb_norm_fn(|x| p.eval_derivative(x).norm(), p.degree().saturating_sub(1))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NormReport {
    pub n: usize,
    pub norm: f64,
    pub derivative_norm: f64,
    pub ratio: f64,
    pub bound: f64,
    pub counts: ZeroCounts,
    pub holds: bool,
}

fn norm_report(p: &DiskPolynomial, bound: f64) -> NormReport {
    let norm = cheb_norm(p);
    let derivative_norm = cheb_norm_derivative(p);
    NormReport {
        n: p.degree(),
        norm,
        derivative_norm,
        ratio: derivative_norm / norm,
        bound,
        counts: p.zero_counts(),
        holds: derivative_norm >= bound * norm - 1e-10,
    }
}

/// `||p'|| >= ||p|| / 4`.
pub fn verify_cor1(p: &DiskPolynomial) -> NormReport {
    norm_report(p, 0.25)
}

/// `max(1/4, sqrt((max(n+, n-) + n0) / (2 min(n+, n-) + 1)) / 900)`.
pub fn cor2_bound(c: &ZeroCounts) -> f64 {
    let hi = c.n_plus.max(c.n_minus) + c.n_zero;
    let lo = c.n_plus.min(c.n_minus);
    (0.25f64).max((hi as f64 / (2 * lo + 1) as f64).sqrt() / 900.0)
}

/// `||p'|| >= cor2_bound * ||p||`.
pub fn verify_cor2(p: &DiskPolynomial) -> NormReport {
    norm_report(p, cor2_bound(&p.zero_counts()))
}

/// `|p'(at) / p(at)|` at `at = +-1`.
pub fn endpoint_ratio(p: &DiskPolynomial, at: f64) -> Result<f64, PolyNormError> {
    if at != 1.0 && at != -1.0 {
        return Err(PolyNormError::Domain(format!("endpoint must be +1 or -1, got {at}")));
    }
    if p.zeros.iter().any(|&z| z == Complex64::new(at, 0.0)) {
        return Err(PolyNormError::ZeroAtEndpoint(at));
    }
    Ok(p.eval_logderiv(at).norm())
}

/// Estimated measures of `G_delta = {|p'| >= delta n |p|}` on each half.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GDeltaReport {
    pub delta: f64,
    pub measure_minus: f64,
    pub measure_plus: f64,
    pub holds: bool,
}

/// Length of `{phi >= 0}` in `[a, b]` from `samples` cells, with bisection
/// at every sign change.
fn superlevel_length<F: Fn(f64) -> f64>(phi: &F, a: f64, b: f64, samples: usize) -> f64 {
    let crossing = |mut lo: f64, mut hi: f64, lo_in: bool| -> f64 {
        while hi - lo > 1e-15 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if (phi(mid) >= 0.0) == lo_in {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let mut total = 0.0;
    let mut x0 = a;
    let mut in0 = phi(a) >= 0.0;
    for i in 1..=samples {
        let x1 = if i == samples { b } else { a + (b - a) * i as f64 / samples as f64 };
        let in1 = phi(x1) >= 0.0;
        total += match (in0, in1) {
            (true, true) => x1 - x0,
            (false, false) => 0.0,
            (true, false) => crossing(x0, x1, true) - x0,
            (false, true) => x1 - crossing(x0, x1, false),
        };
        x0 = x1;
        in0 = in1;
    }
    total
}

pub fn g_delta_positivity(p: &DiskPolynomial, delta: f64) -> Result<GDeltaReport, PolyNormError> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(PolyNormError::Domain(format!("delta = {delta} is outside (0, 1/2)")));
    }
    let level = delta * p.degree() as f64;
    let phi = |x: f64| p.eval_derivative(x).norm() - level * p.eval(x).norm();
    let measure_minus = superlevel_length(&phi, -1.0, 0.0, G_DELTA_SAMPLES);
    let measure_plus = superlevel_length(&phi, 0.0, 1.0, G_DELTA_SAMPLES);
    Ok(GDeltaReport { delta, measure_minus, measure_plus, holds: measure_minus > 0.0 && measure_plus > 0.0 })
}

/// `int_{-1}^{1} |p'/p|^e dx` (or with weight `|x|^e`), for experiments with
/// zeros inside the disk. Breakpoints sit at `0`, `+-1` and every `Re z_k`.
pub fn disk_lp_mean(p: &DiskPolynomial, exponent: f64, weighted: bool, rel_tol: f64) -> Result<QuadratureResult, QuadratureError> {
    if !(exponent > 0.0 && exponent.is_finite()) {
        return Err(QuadratureError::InvalidSpec(format!("exponent must be positive, got {exponent}")));
    }
    if p.zeros.iter().any(|z| z.im == 0.0 && z.re.abs() <= 1.0 && exponent >= 1.0) {
        return Ok(QuadratureResult::divergent());
    }
    let mut b = vec![-1.0, 0.0, 1.0];
    b.extend(p.zeros.iter().map(|z| z.re).filter(|x| x.abs() < 1.0));
    b.sort_by(f64::total_cmp);
    b.dedup();
    let segments: Vec<(f64, f64)> = b.windows(2).map(|w| (w[0], w[1])).collect();
    let f = |_: usize, x: f64| {
        let g = p.eval_logderiv(x).norm();
        (if weighted { x.abs() * g } else { g }).powf(exponent)
    };
    adaptive(&f, &segments, rel_tol, 0.0, 200_000, false).into_result()
}
