//! Exact level sets `E = {x in [-1, 1] : |Re(x g_n(x))| >= delta n}`, their
//! measure and the endpoint window where the guaranteed part of `E` lives.
//!
//! The boundary of `E` consists of real roots of the two level polynomials
//! `N -/+ delta n D` (with `F = N / D`), each of degree at most `2n`. Roots are
//! isolated by Bernstein subdivision, refined on the stable pole-sum form of
//! `F`, and the pieces between consecutive roots are classified by the sign
//! of `|F| - delta n` at their midpoints.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::compensated_sum;
use crate::poles::PoleSet;
use crate::poly::{isolate_roots, IsolationFailure, RootBracket};

/// Root brackets are refined to this width before the Newton polish.
pub const ROOT_WIDTH: f64 = 1e-12;
const NODE_BUDGET: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LevelSetError {
    #[error("root isolation failed for the {side} level polynomial: {reason}")]
    RootIsolationFailure { side: &'static str, reason: String },
    #[error("invalid interval [{0}, {1}]")]
    InvalidInterval(f64, f64),
    #[error("delta must be positive and finite, got {0}")]
    InvalidDelta(f64),
}

/// Finite union of disjoint closed subintervals of `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "UnionDoc", into = "UnionDoc")]
pub struct IntervalUnion {
    intervals: Vec<(f64, f64)>,
    measure: f64,
}

#[derive(Serialize, Deserialize)]
struct UnionDoc {
    intervals: Vec<(f64, f64)>,
    measure: f64,
}

impl TryFrom<UnionDoc> for IntervalUnion {
    type Error = LevelSetError;

    fn try_from(doc: UnionDoc) -> Result<Self, Self::Error> {
        IntervalUnion::new(doc.intervals)
    }
}

impl From<IntervalUnion> for UnionDoc {
    fn from(u: IntervalUnion) -> Self {
        UnionDoc { intervals: u.intervals, measure: u.measure }
    }
}

impl IntervalUnion {
    /// Sorts and merges overlapping or touching pieces.
    pub fn new(mut pieces: Vec<(f64, f64)>) -> Result<Self, LevelSetError> {
        for &(a, b) in &pieces {
            if !(a.is_finite() && b.is_finite()) || a > b || a < -1.0 || b > 1.0 {
                return Err(LevelSetError::InvalidInterval(a, b));
            }
        }
        pieces.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pieces.len());
        for (a, b) in pieces {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        let measure = compensated_sum(merged.iter().map(|(a, b)| b - a));
        Ok(Self { intervals: merged, measure })
    }

    pub fn empty() -> Self {
        Self { intervals: Vec::new(), measure: 0.0 }
    }

    pub fn full() -> Self {
        Self { intervals: vec![(-1.0, 1.0)], measure: 2.0 }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.measure
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a <= x && x <= b)
    }

    /// Set intersection; zero-length overlaps are dropped.
    pub fn intersect(&self, other: &IntervalUnion) -> IntervalUnion {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.intervals.len() && j < other.intervals.len() {
            let (a1, b1) = self.intervals[i];
            let (a2, b2) = other.intervals[j];
            let lo = a1.max(a2);
            let hi = b1.min(b2);
            if lo < hi {
                out.push((lo, hi));
            }
            if b1 < b2 {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalUnion::new(out).expect("intersection of valid unions is valid")
    }

    /// Closure of `[-1, 1]` minus this set.
    pub fn complement(&self) -> IntervalUnion {
        let mut out = Vec::new();
        let mut cursor = -1.0;
        for &(a, b) in &self.intervals {
            if a > cursor {
                out.push((cursor, a));
            }
            cursor = b;
        }
        if cursor < 1.0 {
            out.push((cursor, 1.0));
        }
        IntervalUnion::new(out).expect("complement pieces are ordered")
    }

    /// Image under `x -> -x`.
    pub fn reflect(&self) -> IntervalUnion {
        IntervalUnion::new(self.intervals.iter().map(|&(a, b)| (-b, -a)).collect())
            .expect("reflection preserves validity")
    }

    /// Every piece of `self` lies inside some piece of `other`.
    pub fn is_subset_of(&self, other: &IntervalUnion) -> bool {
        self.intervals
            .iter()
            .all(|&(a, b)| other.intervals.iter().any(|&(c, d)| c <= a && b <= d))
    }

    /// Length of the longest piece.
    pub fn longest(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).fold(0.0, f64::max)
    }
}

/// Sum of the piece lengths.
pub fn measure(u: &IntervalUnion) -> f64 {
    u.measure()
}

pub fn intersect(a: &IntervalUnion, b: &IntervalUnion) -> IntervalUnion {
    a.intersect(b)
}

/// Level parameters: `delta` and the threshold `delta * n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelQuery {
    pub delta: f64,
    pub n: usize,
    pub threshold: f64,
}

impl LevelQuery {
    pub fn new(delta: f64, n: usize) -> Result<Self, LevelSetError> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(LevelSetError::InvalidDelta(delta));
        }
        Ok(Self { delta, n, threshold: delta * n as f64 })
    }

    pub fn for_poles(delta: f64, poles: &PoleSet) -> Result<Self, LevelSetError> {
        Self::new(delta, poles.len())
    }

    /// Whether the lower bound on the measure of `E` applies.
    pub fn in_guarantee_range(&self) -> bool {
        self.delta < 0.5
    }
}

/// `K(delta) = (3/32) (1 - 2 delta) / (1 + 2 delta)^2`.
pub fn k_delta(delta: f64) -> f64 {
    3.0 / 32.0 * (1.0 - 2.0 * delta) / ((1.0 + 2.0 * delta) * (1.0 + 2.0 * delta))
}

/// Endpoint window `{x : |x| > 1 - 3 / ((2 + 4 delta) n)}`, stored closed.
pub fn delta_window(n: usize, delta: f64) -> IntervalUnion {
    let width = 3.0 / ((2.0 + 4.0 * delta) * n as f64);
    if width >= 1.0 {
        return IntervalUnion::full();
    }
    IntervalUnion::new(vec![(-1.0, -1.0 + width), (1.0 - width, 1.0)]).expect("window pieces are valid")
}

/// Refined boundary points of the level set, per level polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelRoots {
    /// Roots of `F = +delta n` in `[-1, 1]`.
    pub upper: Vec<f64>,
    /// Roots of `F = -delta n` in `[-1, 1]`.
    pub lower: Vec<f64>,
    /// Degree of each level polynomial.
    pub degree: usize,
    /// Number of brackets that ended at the width floor unresolved.
    pub clusters: usize,
}

/// `F` on `[-1, 1]`, with the one-sided limit `-inf` at a real pole.
fn level_or_limit(poles: &PoleSet, x: f64) -> f64 {
    poles.eval_level(x).unwrap_or(f64::NEG_INFINITY)
}

/// `F'(x)`, away from real poles.
fn level_slope(poles: &PoleSet, x: f64) -> f64 {
    poles
        .points()
        .map(|z| {
            let (a, b) = (z.re, z.im);
            let u = x - a;
            if b == 0.0 {
                -a / (u * u)
            } else {
                let d = u * u + b * b;
                ((2.0 * x - a) * d - 2.0 * x * u * u) / (d * d)
            }
        })
        .sum()
}

fn refine_root(poles: &PoleSet, target: f64, mut lo: f64, mut hi: f64) -> Option<f64> {
    let r = |x: f64| level_or_limit(poles, x) - target;
    let (mut rlo, rhi) = (r(lo), r(hi));
    if rlo == 0.0 {
        return Some(lo);
    }
    if rhi == 0.0 {
        return Some(hi);
    }
    if (rlo > 0.0) == (rhi > 0.0) {
        return None;
    }
    while hi - lo > ROOT_WIDTH {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let rm = r(mid);
        if rm == 0.0 {
            return Some(mid);
        }
        if (rm > 0.0) == (rlo > 0.0) {
            lo = mid;
            rlo = rm;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    let rm = r(mid);
    let slope = level_slope(poles, mid);
    if slope.is_finite() && slope != 0.0 {
        let polished = mid - rm / slope;
        if lo <= polished && polished <= hi && r(polished).abs() <= rm.abs() {
            return Some(polished);
        }
    }
    Some(mid)
}

/// Sign changes of the stable residual on a fine grid inside a bracket whose
/// Descartes count disagreed with the endpoint signs.
fn scan_bracket(poles: &PoleSet, target: f64, lo: f64, hi: f64, out: &mut Vec<f64>) {
    const STEPS: usize = 64;
    let mut prev_x = lo;
    let mut prev_r = level_or_limit(poles, lo) - target;
    for i in 1..=STEPS {
        let x = if i == STEPS { hi } else { lo + (hi - lo) * i as f64 / STEPS as f64 };
        let rx = level_or_limit(poles, x) - target;
        if (rx > 0.0) != (prev_r > 0.0) {
            if let Some(root) = refine_root(poles, target, prev_x, x) {
                out.push(root);
            }
        }
        prev_x = x;
        prev_r = rx;
    }
}

/// Boundary points of `E_delta` for both signs of the level.
pub fn level_roots(poles: &PoleSet, q: &LevelQuery) -> Result<LevelRoots, LevelSetError> {
    let (num, den) = poles.level_bernstein();
    let degree = num.degree().max(den.degree());
    let mut clusters = 0;
    let mut sides = Vec::with_capacity(2);
    for (side, sign) in [("upper", 1.0), ("lower", -1.0)] {
        let target = sign * q.threshold;
        let level_poly = num.add(&den.scale(-target));
        let brackets = isolate_roots(&level_poly, ROOT_WIDTH, NODE_BUDGET).map_err(|e| {
            LevelSetError::RootIsolationFailure {
                side,
                reason: match e {
                    IsolationFailure::NonFinite => "non-finite coefficients".into(),
                    IsolationFailure::Vanishes => "polynomial vanishes identically".into(),
                    IsolationFailure::Budget { nodes } => format!("subdivision budget exhausted after {nodes} nodes"),
                },
            }
        })?;
        let mut roots = Vec::new();
        for b in brackets {
            match b {
                RootBracket::Exact(x) => roots.push(x),
                RootBracket::Simple { lo, hi } => match refine_root(poles, target, lo, hi) {
                    Some(x) => roots.push(x),
                    None => scan_bracket(poles, target, lo, hi, &mut roots),
                },
                RootBracket::Cluster { lo, hi, .. } => {
                    clusters += 1;
                    roots.push(lo);
                    roots.push(hi);
                }
            }
        }
        roots.sort_by(f64::total_cmp);
        roots.dedup();
        sides.push(roots);
    }
    let lower = sides.pop().unwrap();
    let upper = sides.pop().unwrap();
    Ok(LevelRoots { upper, lower, degree, clusters })
}

/// `E_delta(g_n) = {x in [-1, 1] : |F(x)| >= delta n}`.
pub fn level_set(poles: &PoleSet, q: &LevelQuery) -> Result<IntervalUnion, LevelSetError> {
    let roots = level_roots(poles, q)?;
    let mut breaks: Vec<f64> = vec![-1.0, 1.0];
    breaks.extend(roots.upper.iter().chain(&roots.lower).map(|x| x.clamp(-1.0, 1.0)));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let mut pieces: Vec<(f64, f64)> = Vec::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let mid = 0.5 * (a + b);
        if level_or_limit(poles, mid).abs() >= q.threshold {
            match pieces.last_mut() {
                Some(last) if last.1 == a => last.1 = b,
                _ => pieces.push((a, b)),
            }
        }
    }
    IntervalUnion::new(pieces).map_err(|_| LevelSetError::InvalidInterval(-1.0, 1.0))
}

/// Measures entering the lower bound `mu(E cap Delta) >= K(delta) / n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LevelReport {
    pub delta: f64,
    pub n: usize,
    pub level_set: IntervalUnion,
    pub measure: f64,
    pub window_measure: f64,
    pub bound: f64,
    pub holds: bool,
}

pub fn theorem2_check(poles: &PoleSet, delta: f64) -> Result<LevelReport, LevelSetError> {
    let q = LevelQuery::for_poles(delta, poles)?;
    let e = level_set(poles, &q)?;
    let in_window = e.intersect(&delta_window(poles.len(), delta));
    let bound = k_delta(delta) / poles.len() as f64;
    Ok(LevelReport {
        delta,
        n: poles.len(),
        measure: e.measure(),
        window_measure: in_window.measure(),
        holds: in_window.measure() >= bound,
        bound,
        level_set: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn poles(angles: &[f64]) -> PoleSet {
        PoleSet::new(angles.to_vec()).unwrap()
    }

    fn union(pieces: &[(f64, f64)]) -> IntervalUnion {
        IntervalUnion::new(pieces.to_vec()).unwrap()
    }

    #[test]
    fn single_pole_at_i() {
        // F = x^2 / (x^2 + 1); F >= 0.2 iff x^2 >= 0.25.
        let e = level_set(&poles(&[FRAC_PI_2]), &LevelQuery::new(0.2, 1).unwrap()).unwrap();
        assert_eq!(e.intervals().len(), 2);
        assert_abs_diff_eq!(e.intervals()[0].0, -1.0);
        assert_abs_diff_eq!(e.intervals()[0].1, -0.5, epsilon = 1e-13);
        assert_abs_diff_eq!(e.intervals()[1].0, 0.5, epsilon = 1e-13);
        assert_abs_diff_eq!(e.intervals()[1].1, 1.0);
        assert_abs_diff_eq!(e.measure(), 1.0, epsilon = 1e-12);

        let e = level_set(&poles(&[FRAC_PI_2]), &LevelQuery::new(0.6, 1).unwrap()).unwrap();
        assert!(e.is_empty());
    }

    #[test]
    fn real_pole_side_is_included() {
        // F = x / (x - 1): |F| >= 1/2 iff x <= -1 or x >= 1/3.
        let e = level_set(&poles(&[0.0]), &LevelQuery::new(0.5, 1).unwrap()).unwrap();
        // x = -1 is a touch point with |F| = 1/2 and is dropped.
        assert_eq!(e.intervals().len(), 1);
        assert_abs_diff_eq!(e.intervals()[0].0, 1.0 / 3.0, epsilon = 1e-13);
        assert_eq!(e.intervals()[0].1, 1.0);
        assert_abs_diff_eq!(e.measure(), 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn measure_examples() {
        assert_eq!(union(&[(-1.0, -0.5), (0.5, 1.0)]).measure(), 1.0);
        assert_eq!(IntervalUnion::empty().measure(), 0.0);
        assert_eq!(measure(&union(&[(0.0, 1.0)])), 1.0);
    }

    #[test]
    fn window_examples() {
        assert_eq!(delta_window(1, 0.2), IntervalUnion::full());
        let w = delta_window(10, 0.25);
        assert_eq!(w.intervals().len(), 2);
        assert_abs_diff_eq!(w.intervals()[0].1, -0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(w.intervals()[1].0, 0.9, epsilon = 1e-15);
        assert!(delta_window(1_000_000, 0.3).measure() < 1e-5);
    }

    #[test]
    fn intersect_examples() {
        assert_eq!(intersect(&union(&[(0.0, 1.0)]), &union(&[(0.5, 1.0)])), union(&[(0.5, 1.0)]));
        assert_eq!(
            union(&[(-1.0, -0.5), (0.5, 1.0)]).intersect(&union(&[(0.9, 1.0)])),
            union(&[(0.9, 1.0)])
        );
        assert!(union(&[(-1.0, -0.5)]).intersect(&union(&[(0.0, 0.5)])).is_empty());
    }

    #[test]
    fn union_validation_and_merging() {
        assert!(IntervalUnion::new(vec![(0.5, 0.2)]).is_err());
        assert!(IntervalUnion::new(vec![(-1.5, 0.2)]).is_err());
        let u = union(&[(0.5, 0.7), (-0.2, 0.1), (0.1, 0.3), (0.6, 0.9)]);
        assert_eq!(u.intervals(), &[(-0.2, 0.3), (0.5, 0.9)]);
        let json = serde_json::to_string(&u).unwrap();
        assert!(json.contains("\"intervals\":[[-0.2,0.3],[0.5,0.9]]"));
        let back: IntervalUnion = serde_json::from_str(&json).unwrap();
        assert_eq!(back, u);
        assert!(serde_json::from_str::<IntervalUnion>(r#"{"intervals":[[0.3,0.1]],"measure":0}"#).is_err());
    }

    #[test]
    fn sampling_consistency_on_random_configurations() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for trial in 0..40 {
            let n = 1 + trial % 12;
            let p = PoleSet::random(n, &mut rng);
            let delta = [0.1, 0.2, 0.3, 0.4][trial % 4];
            let q = LevelQuery::for_poles(delta, &p).unwrap();
            let e = level_set(&p, &q).unwrap();
            let c = e.complement();
            for (set, inside) in [(&e, true), (&c, false)] {
                if set.measure() == 0.0 {
                    continue;
                }
                for _ in 0..1000 {
                    // Uniform draw from the union.
                    let mut u = rng.gen_range(0.0..set.measure());
                    let mut x = set.intervals()[0].0;
                    for &(a, b) in set.intervals() {
                        if u <= b - a {
                            x = a + u;
                            break;
                        }
                        u -= b - a;
                    }
                    let f = p.eval_level(x).map(f64::abs).unwrap_or(f64::INFINITY);
                    if inside {
                        assert!(f >= q.threshold - 1e-9, "trial {trial}: x={x} |F|={f}");
                    } else {
                        assert!(f < q.threshold + 1e-9, "trial {trial}: x={x} |F|={f}");
                    }
                }
            }
        }
    }

    #[test]
    fn monotone_in_delta() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..30 {
            let n = rng.gen_range(1..=12);
            let p = PoleSet::random(n, &mut rng);
            let deltas = [0.05, 0.1, 0.2, 0.3, 0.4, 0.6];
            let sets: Vec<IntervalUnion> = deltas
                .iter()
                .map(|&d| level_set(&p, &LevelQuery::for_poles(d, &p).unwrap()).unwrap())
                .collect();
            for w in sets.windows(2) {
                // Endpoints are computed independently, so allow root-width slack.
                let shrunk = IntervalUnion::new(
                    w[1].intervals()
                        .iter()
                        .filter(|(a, b)| b - a > 4.0 * ROOT_WIDTH)
                        .map(|&(a, b)| (a + 2.0 * ROOT_WIDTH, b - 2.0 * ROOT_WIDTH))
                        .collect(),
                )
                .unwrap();
                assert!(shrunk.is_subset_of(&w[0]));
            }
        }
    }

    #[test]
    fn root_counts_bounded_by_degree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=12 {
            let p = PoleSet::random(n, &mut rng);
            let r = level_roots(&p, &LevelQuery::for_poles(0.25, &p).unwrap()).unwrap();
            assert!(r.degree <= 2 * n);
            assert!(r.upper.len() <= r.degree && r.lower.len() <= r.degree);
        }
    }

    #[test]
    fn lower_bound_holds_on_random_configurations() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..60 {
            let n = rng.gen_range(1..=12);
            let p = PoleSet::random(n, &mut rng);
            for delta in [0.1, 0.2, 0.3, 0.4] {
                let r = theorem2_check(&p, delta).unwrap();
                assert!(r.holds, "n={n} delta={delta}: {} < {}", r.window_measure, r.bound);
            }
        }
    }

    #[test]
    fn equally_spaced_with_real_poles() {
        let p = poles(&[0.0, PI]);
        let e = level_set(&p, &LevelQuery::for_poles(0.25, &p).unwrap()).unwrap();
        // F = 2x^2/(x^2-1) <= 0; |F| >= 1/2 iff x^2 >= 1/5.
        let cut = (0.2_f64).sqrt();
        assert_abs_diff_eq!(e.measure(), 2.0 * (1.0 - cut), epsilon = 1e-12);
    }
}
