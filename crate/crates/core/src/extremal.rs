//! The sharpness family `g~_n(x) = n x^(n-1) / (x^n + i)`, the logarithmic
//! derivative of `x^n + i`, and its closed forms.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::levelset::IntervalUnion;
use crate::poles::{ComplexPoint, PoleSet};
use crate::quadrature::{adaptive, lp_mean, MeanSpec, QuadratureError};

/// Parameters of one member of the family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremalSpec {
    pub n: usize,
    pub p: f64,
    pub delta: f64,
    pub kappa: f64,
}

impl ExtremalSpec {
    pub fn new(n: usize, p: f64, delta: f64) -> Self {
        Self { n, p, delta, kappa: kappa(p) }
    }
}

/// `kappa = min(p - 1, 0)`.
pub fn kappa(p: f64) -> f64 {
    (p - 1.0).min(0.0)
}

pub fn eval_gtilde(n: usize, x: f64) -> ComplexPoint {
    let xn = x.powi(n as i32);
    let num = n as f64 * x.powi(n as i32 - 1);
    Complex64::new(num, 0.0) / Complex64::new(xn, 1.0)
}

/// `Re(x g~_n(x)) = n x^(2n) / (x^(2n) + 1)`.
pub fn re_x_gtilde(n: usize, x: f64) -> f64 {
    let x2n = x.powi(2 * n as i32);
    n as f64 * x2n / (x2n + 1.0)
}

/// `int_0^1 2 t^e (t^2 + 1)^(-p/2) dt` for `e > -1`, with `t = u^(1/(1+e))`
/// removing the endpoint singularity when `e < 0`.
fn weighted_tail_integral(e: f64, p: f64, rel_tol: f64) -> Result<f64, QuadratureError> {
    let s = if e < 0.0 { 1.0 / (1.0 + e) } else { 1.0 };
    let f = |_: usize, u: f64| -> f64 {
        if s == 1.0 {
            2.0 * u.powf(e) * (u * u + 1.0).powf(-0.5 * p)
        } else {
            let t = u.powf(s);
            2.0 * s * (t * t + 1.0).powf(-0.5 * p)
        }
    };
    adaptive(&f, &[(0.0, 1.0)], rel_tol, 0.0, 10_000, false)
        .into_result()
        .map(|r| r.value)
}

/// `int_{-1}^{1} |g~_n|^p = 2 n^(p-1) int_0^1 t^((1 - 1/n)(p - 1)) (t^2 + 1)^(-p/2) dt`.
pub fn lp_mean_gtilde(n: usize, p: f64) -> Result<f64, QuadratureError> {
    if !(p.is_finite() && p > 0.0) || n == 0 {
        return Err(QuadratureError::InvalidSpec(format!("need n >= 1 and p > 0, got n={n} p={p}")));
    }
    let nf = n as f64;
    let e = (1.0 - 1.0 / nf) * (p - 1.0);
    Ok(nf.powf(p - 1.0) * weighted_tail_integral(e, p, 1e-10)?)
}

/// Direct quadrature of `int |g~_n|^p` over the pole set of `x^n + i`.
pub fn lp_mean_gtilde_direct(n: usize, p: f64) -> Result<f64, QuadratureError> {
    lp_mean(&to_poleset(n), &MeanSpec::new(p, false).with_tol(1e-8)).map(|r| r.value)
}

/// `C~_p = int_0^1 2 t^kappa (t^2 + 1)^(-p/2) dt`.
pub fn ctilde(p: f64) -> Result<f64, QuadratureError> {
    if !(p.is_finite() && p > 0.0) {
        return Err(QuadratureError::InvalidSpec(format!("p must be positive, got {p}")));
    }
    weighted_tail_integral(kappa(p), p, 1e-10)
}

/// `K~ = ln(1/delta - 1)`.
pub fn k_tilde(delta: f64) -> f64 {
    (1.0 / delta - 1.0).ln()
}

/// `E_delta(g~_n) = {|x| >= (1/delta - 1)^(-1/(2n))}`; empty for `delta >= 1/2`.
pub fn level_set_gtilde(n: usize, delta: f64) -> IntervalUnion {
    if !(delta > 0.0 && delta < 0.5) {
        return IntervalUnion::empty();
    }
    let cut = (1.0 / delta - 1.0).powf(-1.0 / (2.0 * n as f64));
    IntervalUnion::new(vec![(-1.0, -cut), (cut, 1.0)]).expect("cutoff lies in (0, 1)")
}

/// The `n` roots of `z^n = -i`, the poles of `g~_n`.
pub fn to_poleset(n: usize) -> PoleSet {
    let angles = (0..n).map(|k| (TAU * k as f64 - PI / 2.0) / n as f64).collect();
    PoleSet::new(angles).expect("n >= 1 finite angles")
}
