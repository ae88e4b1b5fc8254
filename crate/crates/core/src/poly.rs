//! Real polynomials in the power basis and in the Bernstein basis on
//! `[-1, 1]`, plus Descartes-rule root isolation by de Casteljau subdivision.

use std::ops::{Add, Mul};

use crate::numeric::binomial;

/// Real polynomial with ascending power-basis coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }
}

impl Add for &Poly {
    type Output = Poly;

    fn add(self, rhs: &Poly) -> Poly {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..len)
            .map(|i| self.coeffs.get(i).unwrap_or(&0.0) + rhs.coeffs.get(i).unwrap_or(&0.0))
            .collect();
        Poly::new(coeffs)
    }
}

impl Mul for &Poly {
    type Output = Poly;

    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

/// Polynomial in the Bernstein basis of fixed degree on `[-1, 1]`.
///
/// Coefficient `i` multiplies `C(d, i) t^i (1 - t)^(d - i)` with
/// `x = -1 + 2t`. Products of nonnegative factors stay cancellation-free,
/// which is why the level polynomials are assembled in this basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Bernstein {
    coeffs: Vec<f64>,
}

impl Bernstein {
    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "Bernstein form needs at least one coefficient");
        Self { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    /// `x` as a degree-one form.
    pub fn identity() -> Self {
        Self { coeffs: vec![-1.0, 1.0] }
    }

    /// `x - root` as a degree-one form.
    pub fn linear_factor(root: f64) -> Self {
        Self { coeffs: vec![-1.0 - root, 1.0 - root] }
    }

    /// Degree-two form of a quadratic given by its values and slope at `x = -1`.
    /// For `q(x) = x^2 + beta x + gamma`, the middle coefficient is `q(-1) + q'(-1)`.
    pub fn quadratic(beta: f64, gamma: f64) -> Self {
        let at_minus = 1.0 - beta + gamma;
        let slope_minus = -2.0 + beta;
        let at_plus = 1.0 + beta + gamma;
        Self { coeffs: vec![at_minus, at_minus + slope_minus, at_plus] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// Raise to degree `target` without changing the represented polynomial.
    pub fn elevate_to(&self, target: usize) -> Self {
        let mut current = self.coeffs.clone();
        while current.len() - 1 < target {
            let d = current.len() - 1;
            let next_deg = d + 1;
            let mut next = vec![0.0; next_deg + 1];
            next[0] = current[0];
            next[next_deg] = current[d];
            for i in 1..next_deg {
                let w = i as f64 / next_deg as f64;
                next[i] = w * current[i - 1] + (1.0 - w) * current[i];
            }
            current = next;
        }
        Self { coeffs: current }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let d = self.degree().max(rhs.degree());
        let a = self.elevate_to(d);
        let b = rhs.elevate_to(d);
        Self { coeffs: a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x + y).collect() }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let (p, q) = (self.degree(), rhs.degree());
        let mut out = vec![0.0; p + q + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += binomial(p, i) * binomial(q, j) * a * b;
            }
        }
        for (k, c) in out.iter_mut().enumerate() {
            *c /= binomial(p + q, k);
        }
        Self { coeffs: out }
    }

    /// de Casteljau evaluation at `x` in `[-1, 1]`.
    pub fn eval(&self, x: f64) -> f64 {
        let t = 0.5 * (x + 1.0);
        let mut work = self.coeffs.clone();
        let d = work.len();
        for level in 1..d {
            for i in 0..d - level {
                work[i] = (1.0 - t) * work[i] + t * work[i + 1];
            }
        }
        work[0]
    }

    /// Power-basis coefficients, for comparisons and serialization.
    pub fn to_power(&self) -> Poly {
        // sum_i b_i C(d,i) t^i (1-t)^(d-i), with t = (x+1)/2.
        let d = self.degree();
        let t = Poly::new(vec![0.5, 0.5]);
        let one_minus_t = Poly::new(vec![0.5, -0.5]);
        let mut acc = Poly::constant(0.0);
        for (i, b) in self.coeffs.iter().enumerate() {
            let mut term = Poly::constant(binomial(d, i) * b);
            for _ in 0..i {
                term = &term * &t;
            }
            for _ in 0..d - i {
                term = &term * &one_minus_t;
            }
            acc = &acc + &term;
        }
        acc
    }
}

/// Split Bernstein coefficients on `[lo, hi]` at the midpoint.
fn split(coeffs: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let d = coeffs.len();
    let mut work = coeffs.to_vec();
    let mut left = Vec::with_capacity(d);
    let mut right = vec![0.0; d];
    left.push(work[0]);
    right[d - 1] = work[d - 1];
    for level in 1..d {
        for i in 0..d - level {
            work[i] = 0.5 * (work[i] + work[i + 1]);
        }
        left.push(work[0]);
        right[d - 1 - level] = work[d - 1 - level];
    }
    (left, right)
}

/// Sign variations of the nonzero coefficients.
pub fn sign_variations(coeffs: &[f64]) -> usize {
    let mut last = 0.0_f64;
    let mut count = 0;
    for &c in coeffs {
        if c == 0.0 {
            continue;
        }
        if last != 0.0 && (c > 0.0) != (last > 0.0) {
            count += 1;
        }
        last = c;
    }
    count
}

/// An isolating bracket produced by [`isolate_roots`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RootBracket {
    /// Exactly one simple root inside `(lo, hi)` by Descartes' rule.
    Simple { lo: f64, hi: f64 },
    /// A root sitting exactly on a subdivision point.
    Exact(f64),
    /// Subdivision reached the width floor with two or more variations left:
    /// a tangency or a root cluster narrower than the floor.
    Cluster { lo: f64, hi: f64, variations: usize },
}

/// Why isolation could not be completed.
#[derive(Debug, Clone, PartialEq)]
pub enum IsolationFailure {
    NonFinite,
    Vanishes,
    Budget { nodes: usize },
}

/// Isolate the real roots of `p` in `[-1, 1]` by Bernstein subdivision.
///
/// Roots at the outer endpoints `-1` and `1` are reported as `Exact`.
pub fn isolate_roots(
    p: &Bernstein,
    width_floor: f64,
    node_budget: usize,
) -> Result<Vec<RootBracket>, IsolationFailure> {
    let coeffs = p.coeffs();
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(IsolationFailure::NonFinite);
    }
    if coeffs.iter().all(|&c| c == 0.0) {
        return Err(IsolationFailure::Vanishes);
    }
    let mut out = Vec::new();
    if coeffs[0] == 0.0 {
        out.push(RootBracket::Exact(-1.0));
    }
    let mut stack = vec![(-1.0_f64, 1.0_f64, coeffs.to_vec())];
    let mut nodes = 0usize;
    while let Some((lo, hi, c)) = stack.pop() {
        nodes += 1;
        if nodes > node_budget {
            return Err(IsolationFailure::Budget { nodes });
        }
        let v = sign_variations(&c);
        if v == 0 {
            continue;
        }
        if v == 1 {
            out.push(RootBracket::Simple { lo, hi });
            continue;
        }
        if hi - lo <= width_floor {
            out.push(RootBracket::Cluster { lo, hi, variations: v });
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let (left, right) = split(&c);
        if left[left.len() - 1] == 0.0 {
            out.push(RootBracket::Exact(mid));
        }
        // Right half pushed first so the left half is processed first.
        stack.push((mid, hi, right));
        stack.push((lo, mid, left));
    }
    if coeffs[coeffs.len() - 1] == 0.0 {
        out.push(RootBracket::Exact(1.0));
    }
    out.sort_by(|a, b| bracket_key(a).total_cmp(&bracket_key(b)));
    Ok(out)
}

fn bracket_key(b: &RootBracket) -> f64 {
    match *b {
        RootBracket::Simple { lo, .. } | RootBracket::Cluster { lo, .. } => lo,
        RootBracket::Exact(x) => x,
    }
}
