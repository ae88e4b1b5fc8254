//! Pole configurations on the unit circle and the functions built on them:
//! the logarithmic derivative `g_n(z) = sum 1/(z - z_k)`, the level function
//! `F(x) = Re(x g_n(x))`, the Poisson kernel and the rational form of `F`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::index_order_sum;
use crate::dd::{self, DdPoly};
use crate::poly::Bernstein;

pub type ComplexPoint = Complex64;

/// Angles read from documents are snapped onto `0` and `pi` within this distance.
pub const ANGLE_SNAP: f64 = 1e-14;

/// Real parts closer than this are merged into one term of the rational form.
const GROUP_TOL: f64 = 1e-15;

#[derive(Debug, Error)]
pub enum PoleError {
    #[error("a pole set needs at least one pole")]
    Empty,
    #[error("angle #{index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
    #[error("evaluation point coincides with pole #{index}")]
    PoleHit { index: usize },
    #[error("x = {0} lies outside [-1, 1]")]
    OutOfDomain(f64),
    #[error("document declares n = {declared} but lists {actual} angles")]
    CountMismatch { declared: usize, actual: usize },
    #[error("malformed pole-set document: {0}")]
    Json(#[from] serde_json::Error),
}

/// Map an angle into `[0, 2pi)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r >= TAU || r == 0.0 {
        0.0
    } else {
        r
    }
}

/// `(cos, sin)` with the two real poles reproduced exactly.
fn unit_point(theta: f64) -> (f64, f64) {
    if theta == 0.0 {
        (1.0, 0.0)
    } else if theta == PI {
        (-1.0, 0.0)
    } else {
        let (s, c) = theta.sin_cos();
        (c, s)
    }
}

/// The poles `z_k = e^{i theta_k}` of `g_n`, stored as angles in `[0, 2pi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoleSetDoc", into = "PoleSetDoc")]
pub struct PoleSet {
    angles: Vec<f64>,
    coords: Vec<ComplexPoint>,
}

#[derive(Serialize, Deserialize)]
struct PoleSetDoc {
    n: usize,
    angles: Vec<f64>,
}

impl TryFrom<PoleSetDoc> for PoleSet {
    type Error = PoleError;

    fn try_from(doc: PoleSetDoc) -> Result<Self, Self::Error> {
        if doc.n != doc.angles.len() {
            return Err(PoleError::CountMismatch { declared: doc.n, actual: doc.angles.len() });
        }
        PoleSet::with_snap(doc.angles, ANGLE_SNAP)
    }
}

impl From<PoleSet> for PoleSetDoc {
    fn from(p: PoleSet) -> Self {
        PoleSetDoc { n: p.angles.len(), angles: p.angles }
    }
}

/// One group of poles sharing a real part, as it enters `F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LevelTerm {
    pub re: f64,
    /// Squared imaginary part; zero for the real poles `+1` and `-1`.
    pub im_sq: f64,
    pub multiplicity: usize,
    pub real: bool,
}

impl PoleSet {
    pub fn new(angles: Vec<f64>) -> Result<Self, PoleError> {
        Self::with_snap(angles, 0.0)
    }

    /// Like [`PoleSet::new`], snapping angles within `snap` of `0`, `pi` or
    /// `2pi` onto those values so real poles are classified deterministically.
    pub fn with_snap(angles: Vec<f64>, snap: f64) -> Result<Self, PoleError> {
        if angles.is_empty() {
            return Err(PoleError::Empty);
        }
        let mut out = Vec::with_capacity(angles.len());
        for (index, &value) in angles.iter().enumerate() {
            if !value.is_finite() {
                return Err(PoleError::NonFinite { index, value });
            }
            let mut theta = normalize_angle(value);
            if theta <= snap || TAU - theta <= snap {
                theta = 0.0;
            } else if (theta - PI).abs() <= snap {
                theta = PI;
            }
            out.push(theta);
        }
        let coords = out
            .iter()
            .map(|&t| {
                let (re, im) = unit_point(t);
                Complex64::new(re, im)
            })
            .collect();
        Ok(Self { angles: out, coords })
    }

    /// `n` independent uniform angles.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        assert!(n >= 1);
        let angles = (0..n).map(|_| rng.gen_range(0.0..TAU)).collect();
        Self::new(angles).expect("uniform angles are finite")
    }

    pub fn from_json(text: &str) -> Result<Self, PoleError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("pole sets always serialize")
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn point(&self, k: usize) -> ComplexPoint {
        self.coords[k]
    }

    pub fn points(&self) -> impl Iterator<Item = ComplexPoint> + '_ {
        self.coords.iter().copied()
    }

    pub fn is_real_pole(&self, k: usize) -> bool {
        self.angles[k] == 0.0 || self.angles[k] == PI
    }

    /// Indices of the poles at `+1` or `-1`.
    pub fn real_poles(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.is_real_pole(k)).collect()
    }

    pub fn has_real_pole(&self) -> bool {
        (0..self.len()).any(|k| self.is_real_pole(k))
    }

    /// All poles multiplied by `e^{i phi}`.
    pub fn rotate(&self, phi: f64) -> Self {
        Self::new(self.angles.iter().map(|t| t + phi).collect()).expect("rotation keeps angles finite")
    }

    /// All poles replaced by their complex conjugates.
    pub fn conjugate(&self) -> Self {
        Self::new(self.angles.iter().map(|t| -t).collect()).expect("conjugation keeps angles finite")
    }

    /// `g_n(z) = sum_k 1/(z - z_k)` by direct summation.
    pub fn eval_logderiv(&self, z: ComplexPoint) -> Result<ComplexPoint, PoleError> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (index, zk) in self.points().enumerate() {
            if zk == z {
                return Err(PoleError::PoleHit { index });
            }
            acc += (z - zk).inv();
        }
        Ok(acc)
    }

    /// `F(x) = Re(x g_n(x))` for `x` in `[-1, 1]`, sign preserved.
    ///
    /// Each pole contributes `x (x - a) / ((x - a)^2 + b^2)` with `z = a + ib`,
    /// reduced to `x / (x - a)` for the real poles.
    pub fn eval_level(&self, x: f64) -> Result<f64, PoleError> {
        if !(-1.0..=1.0).contains(&x) {
            return Err(PoleError::OutOfDomain(x));
        }
        for k in 0..self.len() {
            if self.is_real_pole(k) && self.point(k).re == x {
                return Err(PoleError::PoleHit { index: k });
            }
        }
        Ok(self.level_unchecked(x))
    }

    /// `F(x)` without the domain and pole checks.
    pub(crate) fn level_unchecked(&self, x: f64) -> f64 {
        let n = self.len();
        let terms = self.points().map(|z| level_term(x, z.re, z.im));
        index_order_sum(terms, n)
    }

    /// The poles grouped by real part, in increasing order of the real part.
    pub(crate) fn level_terms(&self) -> Vec<LevelTerm> {
        let mut raw: Vec<LevelTerm> = self
            .points()
            .enumerate()
            .map(|(k, z)| LevelTerm {
                re: z.re,
                im_sq: if self.is_real_pole(k) { 0.0 } else { z.im * z.im },
                multiplicity: 1,
                real: self.is_real_pole(k),
            })
            .collect();
        raw.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.real.cmp(&b.real)));
        let mut grouped: Vec<LevelTerm> = Vec::with_capacity(raw.len());
        for t in raw {
            match grouped.last_mut() {
                Some(g) if g.real == t.real && (g.re - t.re).abs() <= GROUP_TOL => g.multiplicity += 1,
                _ => grouped.push(t),
            }
        }
        grouped
    }

    /// Reduced rational form `numerator / denominator` of `F`.
    ///
    /// Coefficients are accumulated in double-double; the rounded values are
    /// in `numerator`/`denominator` and the residuals in the `_lo` vectors.
    pub fn to_rational(&self) -> RationalLevelFunction {
        let terms = self.level_terms();
        let (nums, dens): (Vec<DdPoly>, Vec<DdPoly>) = terms
            .iter()
            .map(|t| {
                let m = t.multiplicity as f64;
                if t.real {
                    (DdPoly::from_f64(&[0.0, m]), DdPoly::from_f64(&[-t.re, 1.0]))
                } else {
                    (
                        DdPoly::from_f64(&[0.0, -m * t.re, m]),
                        DdPoly::from_f64(&[1.0, -2.0 * t.re, 1.0]),
                    )
                }
            })
            .unzip();
        let (numerator, denominator) = combine_fractions(
            &nums,
            &dens,
            DdPoly::from_f64(&[0.0]),
            DdPoly::from_f64(&[1.0]),
            |a, b| a.mul(b),
            |a, b| a.add(b),
        );
        let split = |p: DdPoly| -> (Vec<f64>, Vec<f64>) {
            p.trimmed().0.iter().map(|c| (c.hi, c.lo)).unzip()
        };
        let (numerator, numerator_lo) = split(numerator);
        let (denominator, denominator_lo) = split(denominator);
        RationalLevelFunction {
            numerator,
            numerator_lo,
            denominator,
            denominator_lo,
            n: self.len(),
            real_pole_flags: self.real_poles(),
        }
    }

    /// Numerator and denominator of `F` in the Bernstein basis on `[-1, 1]`.
    pub(crate) fn level_bernstein(&self) -> (Bernstein, Bernstein) {
        let terms = self.level_terms();
        let (nums, dens): (Vec<Bernstein>, Vec<Bernstein>) = terms
            .iter()
            .map(|t| {
                let m = t.multiplicity as f64;
                if t.real {
                    (Bernstein::identity().scale(m), Bernstein::linear_factor(t.re))
                } else {
                    (
                        Bernstein::quadratic(-t.re, 0.0).scale(m),
                        Bernstein::quadratic(-2.0 * t.re, 1.0),
                    )
                }
            })
            .unzip();
        combine_fractions(
            &nums,
            &dens,
            Bernstein::constant(0.0),
            Bernstein::constant(1.0),
            |a, b| a.mul(b),
            |a, b| a.add(b),
        )
    }
}

/// `sum_k num_k / den_k` over the common denominator `prod_k den_k`.
fn combine_fractions<P: Clone>(
    nums: &[P],
    dens: &[P],
    zero: P,
    one: P,
    mul: impl Fn(&P, &P) -> P,
    add: impl Fn(&P, &P) -> P,
) -> (P, P) {
    let g = dens.len();
    let mut prefix = Vec::with_capacity(g + 1);
    prefix.push(one.clone());
    for d in dens {
        let next = mul(prefix.last().unwrap(), d);
        prefix.push(next);
    }
    let mut suffix = vec![one; g + 1];
    for k in (0..g).rev() {
        suffix[k] = mul(&dens[k], &suffix[k + 1]);
    }
    let mut numerator = zero;
    for k in 0..g {
        let others = mul(&prefix[k], &suffix[k + 1]);
        numerator = add(&numerator, &mul(&nums[k], &others));
    }
    (numerator, prefix.pop().unwrap())
}

/// One pole's contribution to `F(x)`.
#[inline]
pub(crate) fn level_term(x: f64, a: f64, b: f64) -> f64 {
    let dx = x - a;
    if b == 0.0 {
        x / dx
    } else {
        x * dx / (dx * dx + b * b)
    }
}

/// Poisson kernel `P(v; x) = (1 - x^2) / (1 - 2x cos v + x^2)` of the
/// unimodular point `v = e^{i v_angle}`.
pub fn poisson_kernel(v_angle: f64, x: f64) -> Result<f64, PoleError> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(PoleError::OutOfDomain(x));
    }
    let (c, s) = unit_point(normalize_angle(v_angle));
    let dx = x - c;
    let denom = dx * dx + s * s;
    if denom == 0.0 {
        return Err(PoleError::PoleHit { index: 0 });
    }
    Ok(((1.0 - x) * (1.0 + x) / denom).max(0.0))
}

/// Exact rational form of `F(x) = Re(x g_n(x))` on the real line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalLevelFunction {
    /// Ascending power-basis coefficients.
    pub numerator: Vec<f64>,
    #[serde(default)]
    pub numerator_lo: Vec<f64>,
    pub denominator: Vec<f64>,
    #[serde(default)]
    pub denominator_lo: Vec<f64>,
    pub n: usize,
    pub real_pole_flags: Vec<usize>,
}

impl RationalLevelFunction {
    /// `numerator(x) / denominator(x)` by double-double Horner.
    pub fn eval(&self, x: f64) -> f64 {
        dd::horner(&self.numerator, &self.numerator_lo, x)
            / dd::horner(&self.denominator, &self.denominator_lo, x)
    }

    pub fn numerator_degree(&self) -> usize {
        self.numerator.len() - 1
    }
}
