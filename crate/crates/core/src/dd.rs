//! Double-double arithmetic (an unevaluated sum `hi + lo` of two floats),
//! used where power-basis coefficients would otherwise lose digits.

use std::ops::{Add, Mul, Neg};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        Self { hi, lo }
    }

    pub fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

impl Add for Dd {
    type Output = Dd;

    fn add(self, rhs: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, rhs.hi);
        let (t, f) = two_sum(self.lo, rhs.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Mul for Dd {
    type Output = Dd;

    fn mul(self, rhs: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, rhs.hi);
        let e = e + (self.hi * rhs.lo + self.lo * rhs.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

/// Polynomial with double-double coefficients, ascending powers.
#[derive(Debug, Clone, PartialEq)]
pub struct DdPoly(pub Vec<Dd>);

impl DdPoly {
    pub fn from_f64(c: &[f64]) -> Self {
        Self(c.iter().map(|&x| Dd::from_f64(x)).collect())
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let mut out = vec![Dd::ZERO; self.0.len() + rhs.0.len() - 1];
        for (i, &a) in self.0.iter().enumerate() {
            for (j, &b) in rhs.0.iter().enumerate() {
                out[i + j] = out[i + j] + a * b;
            }
        }
        Self(out)
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let len = self.0.len().max(rhs.0.len());
        Self(
            (0..len)
                .map(|i| {
                    self.0.get(i).copied().unwrap_or(Dd::ZERO) + rhs.0.get(i).copied().unwrap_or(Dd::ZERO)
                })
                .collect(),
        )
    }

    /// Drop trailing zero coefficients (keeping at least one).
    pub fn trimmed(mut self) -> Self {
        while self.0.len() > 1 && self.0.last().is_some_and(|c| c.hi == 0.0 && c.lo == 0.0) {
            self.0.pop();
        }
        self
    }
}

/// Horner's rule in double-double for split coefficients `hi[i] + lo[i]`.
pub fn horner(hi: &[f64], lo: &[f64], x: f64) -> f64 {
    let x = Dd::from_f64(x);
    let mut acc = Dd::ZERO;
    for i in (0..hi.len()).rev() {
        let c = Dd::new(hi[i], lo.get(i).copied().unwrap_or(0.0));
        acc = acc * x + c;
    }
    acc.to_f64()
}
