//! Per-instance certificates for the measure bound on `E_delta(g_n)`.
//!
//! Poles are sorted into bands by `|Re z_k|` against the thresholds
//! `T(h_j)`. When the banded counts are large, every pole on one side pushes
//! the Poisson kernel above `h_j` on the common segment `S*`, and `S*` (or its
//! mirror image) is a witness. Otherwise every pole keeps the kernel small
//! next to `+-1`, and the two end caps `S~_m` are a witness.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::levelset::{delta_window, k_delta, level_set, IntervalUnion, LevelQuery, LevelSetError};
use crate::poles::{poisson_kernel, PoleSet};

/// Relative slack on `P(v; x) >= h` for rounding in the kernel evaluation.
pub const LEMMA1_SLACK: f64 = 1e-12;

/// Poles closer than this to a band edge are listed in the audit trail.
pub const BAND_EDGE_TOL: f64 = 1e-14;

/// Default number of bands above the innermost class.
pub const DEFAULT_M: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertificateError {
    #[error("parameter out of range: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error(transparent)]
    LevelSet(#[from] LevelSetError),
}

/// `rho` in `(0, 1/4]` and `h` in `[1, 1/(2 rho)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaParams {
    pub rho: f64,
    pub h: f64,
}

impl LemmaParams {
    pub fn new(rho: f64, h: f64) -> Result<Self, CertificateError> {
        if !(rho > 0.0 && rho <= 0.25) {
            return Err(CertificateError::Domain(format!("rho = {rho} is outside (0, 1/4]")));
        }
        // h_0 = M n and 1/(2 rho) agree only up to rounding.
        let top = 1.0 / (2.0 * rho) * (1.0 + 1e-12);
        if !(h >= 1.0 && h <= top) {
            return Err(CertificateError::Domain(format!("h = {h} is outside [1, 1/(2 rho)] for rho = {rho}")));
        }
        Ok(Self { rho, h })
    }
}

/// `T(h) = sqrt(1 + rho^2 - 2 rho / h)`.
pub fn threshold_t(params: &LemmaParams) -> f64 {
    let LemmaParams { rho, h } = *params;
    (1.0 + rho * rho - 2.0 * rho / h).sqrt()
}

/// `S(h) = [x_-, x_+]`, `x_+- = (sqrt(h^2 - 2 rho h + rho^2 h^2) +- (1 - rho h)) / (h + 1)`.
pub fn guarantee_segment(params: &LemmaParams) -> (f64, f64) {
    let LemmaParams { rho, h } = *params;
    let root = (h * h - 2.0 * rho * h + rho * rho * h * h).sqrt();
    let shift = 1.0 - rho * h;
    ((root - shift) / (h + 1.0), (root + shift) / (h + 1.0))
}

/// `S* = [(sqrt(1 - 3 rho^2) - rho) / (1 + 2 rho), 1 - rho]`.
pub fn s_star(rho: f64) -> Result<(f64, f64), CertificateError> {
    if !(rho > 0.0 && rho <= 0.25) {
        return Err(CertificateError::Domain(format!("rho = {rho} is outside (0, 1/4]")));
    }
    Ok((((1.0 - 3.0 * rho * rho).sqrt() - rho) / (1.0 + 2.0 * rho), 1.0 - rho))
}

/// `P(v; x) >= h` for `Re v >= T(h)` and `x` in `S(h)`.
pub fn lemma1_predicate(v_angle: f64, params: &LemmaParams, x: f64) -> Result<bool, CertificateError> {
    let t = threshold_t(params);
    if v_angle.cos() < t {
        return Err(CertificateError::PreconditionViolation(format!("Re v = {} < T = {t}", v_angle.cos())));
    }
    let (lo, hi) = guarantee_segment(params);
    if !(lo <= x && x <= hi) {
        return Err(CertificateError::PreconditionViolation(format!("x = {x} outside S(h) = [{lo}, {hi}]")));
    }
    let p = poisson_kernel(v_angle, x).map_err(|e| CertificateError::PreconditionViolation(e.to_string()))?;
    Ok(p >= params.h * (1.0 - LEMMA1_SLACK))
}

/// The end caps `[-1, -1 + w]` and `[1 - w, 1]` with `w = 3 s rho / (4h)`,
/// where `P(v; x) < s` whenever `|Re v| < T(h)`.
pub fn lemma2_window(params: &LemmaParams, s: f64) -> Result<[(f64, f64); 2], CertificateError> {
    let limit = 4.0 * params.h / (3.0 * params.rho);
    if !(s > 0.0 && s < limit) {
        return Err(CertificateError::Domain(format!("s = {s} is outside (0, {limit})")));
    }
    let w = 3.0 * s * params.rho / (4.0 * params.h);
    Ok([(-1.0, -1.0 + w), (1.0 - w, 1.0)])
}

/// Pole counts in one band by the sign of `Re z_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SignedCount {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

/// The bands `I_0, ..., I_{m+1}` and their derived quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PolePartition {
    pub classes: Vec<Vec<usize>>,
    pub signed_counts: Vec<SignedCount>,
    /// `T(h_j)` for `j = 0..=m`.
    pub thresholds: Vec<f64>,
    pub h_table: Vec<f64>,
    /// `(alpha_j, alpha_j^+, alpha_j^-)` for `j = 0..=m`.
    pub alpha_table: Vec<(f64, f64, f64)>,
    pub rho: f64,
    pub big_m: f64,
    /// Pole indices lying within `BAND_EDGE_TOL` of a threshold.
    pub near_edges: Vec<usize>,
}

fn check_delta_m(delta: f64, m: usize) -> Result<(), CertificateError> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(CertificateError::Domain(format!("delta = {delta} is outside (0, 1/2)")));
    }
    if m == 0 {
        return Err(CertificateError::Domain("m must be at least 1".into()));
    }
    Ok(())
}

/// Sort poles into bands with `M = 2 + 4 delta`, `rho = 1/(2Mn)` and
/// `h_j = M n^(1 - j/(m+1))`.
pub fn partition(poles: &PoleSet, delta: f64, m: usize) -> Result<PolePartition, CertificateError> {
    check_delta_m(delta, m)?;
    let n = poles.len();
    let nf = n as f64;
    let big_m = 2.0 + 4.0 * delta;
    let rho = 1.0 / ((4.0 + 8.0 * delta) * nf);
    let h_table: Vec<f64> = (0..=m).map(|j| big_m * nf.powf(1.0 - j as f64 / (m + 1) as f64)).collect();
    let thresholds: Vec<f64> = h_table
        .iter()
        .map(|&h| LemmaParams::new(rho, h).map(|p| threshold_t(&p)))
        .collect::<Result<_, _>>()?;

    let mut classes = vec![Vec::new(); m + 2];
    let mut signed_counts = vec![SignedCount::default(); m + 2];
    let mut near_edges = Vec::new();
    for (k, z) in poles.points().enumerate() {
        let a = z.re.abs();
        let j = thresholds.iter().position(|&t| a >= t).unwrap_or(m + 1);
        if thresholds.iter().any(|&t| (a - t).abs() <= BAND_EDGE_TOL) {
            near_edges.push(k);
        }
        classes[j].push(k);
        let c = &mut signed_counts[j];
        match z.re.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => c.positive += 1,
            Some(std::cmp::Ordering::Less) => c.negative += 1,
            _ => c.zero += 1,
        }
    }
    let alpha_table = (0..=m)
        .map(|j| {
            let scale = nf.powf(j as f64 / (m + 1) as f64);
            let c = signed_counts[j];
            (
                classes[j].len() as f64 / scale,
                c.positive as f64 / scale,
                c.negative as f64 / scale,
            )
        })
        .collect();
    Ok(PolePartition { classes, signed_counts, thresholds, h_table, alpha_table, rho, big_m, near_edges })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseTag {
    Case1Plus,
    Case1Minus,
    Case2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Certificate {
    pub case_tag: CaseTag,
    pub n: usize,
    pub m: usize,
    pub delta: f64,
    pub rho: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    pub h_table: Vec<f64>,
    pub alpha_table: Vec<(f64, f64, f64)>,
    pub witness: IntervalUnion,
    pub guarantee: f64,
    pub guaranteed_measure: f64,
    pub partition: PolePartition,
    pub audit: Vec<String>,
}

/// `S~_m = {|x| >= 1 - K(delta) / (2 n^(1 + 1/(m+1)))}`.
pub fn s_tilde(n: usize, delta: f64, m: usize) -> IntervalUnion {
    let w = k_delta(delta) / (2.0 * (n as f64).powf(1.0 + 1.0 / (m + 1) as f64));
    IntervalUnion::new(vec![(-1.0, -1.0 + w), (1.0 - w, 1.0)]).expect("cap width is below 1")
}

/// `S** = {|x| > 1 - K(delta) / (2n)}`, stored closed.
pub fn s_double_star(n: usize, delta: f64) -> IntervalUnion {
    let w = k_delta(delta) / (2.0 * n as f64);
    IntervalUnion::new(vec![(-1.0, -1.0 + w), (1.0 - w, 1.0)]).expect("cap width is below 1")
}

/// Run the band construction and return a witness with its audit trail.
pub fn theorem2_witness(poles: &PoleSet, delta: f64, m: usize) -> Result<Certificate, CertificateError> {
    let part = partition(poles, delta, m)?;
    let n = poles.len();
    let mut audit = Vec::new();
    let sum = |f: fn(&(f64, f64, f64)) -> f64| part.alpha_table.iter().map(f).sum::<f64>();
    let total = sum(|r| r.0);
    let plus = sum(|r| r.1);
    let minus = sum(|r| r.2);
    audit.push(format!("sum alpha = {total}, sum alpha+ = {plus}, sum alpha- = {minus}"));
    for &k in &part.near_edges {
        audit.push(format!("pole {k} lies within {BAND_EDGE_TOL:e} of a band edge"));
    }

    let (case_tag, witness, guaranteed_measure) = if total >= 1.0 {
        let tag = if plus >= 0.5 {
            CaseTag::Case1Plus
        } else if minus >= 0.5 {
            CaseTag::Case1Minus
        } else {
            audit.push("neither side reaches 1/2 after rounding; larger side chosen".into());
            if plus >= minus {
                CaseTag::Case1Plus
            } else {
                CaseTag::Case1Minus
            }
        };
        let (lo, hi) = s_star(part.rho)?;
        let right = IntervalUnion::new(vec![(lo, hi)]).expect("S* lies in [0, 1]");
        let w = if tag == CaseTag::Case1Plus { right } else { right.reflect() };
        let measure = w.measure();
        (tag, w, measure)
    } else {
        let w = s_tilde(n, delta, m);
        let measure = k_delta(delta) / (n as f64).powf(1.0 + 1.0 / (m + 1) as f64);
        (CaseTag::Case2, w, measure)
    };
    Ok(Certificate {
        case_tag,
        n,
        m,
        delta,
        rho: part.rho,
        big_m: part.big_m,
        h_table: part.h_table.clone(),
        alpha_table: part.alpha_table.clone(),
        witness,
        guarantee: delta * n as f64,
        guaranteed_measure,
        partition: part,
        audit,
    })
}

/// Certificates for `m = 1..=max_m`.
pub fn witness_sweep(poles: &PoleSet, delta: f64, max_m: usize) -> Result<Vec<Certificate>, CertificateError> {
    (1..=max_m).map(|m| theorem2_witness(poles, delta, m)).collect()
}

/// Outcome of an independent audit of a certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Verification {
    pub passed: bool,
    pub empty_witness: bool,
    pub points_checked: usize,
    pub first_failure: Option<f64>,
    pub diagnostics: Vec<String>,
}

/// Re-evaluate `|F|` on the witness and check the structural claims.
pub fn verify_certificate(poles: &PoleSet, cert: &Certificate, samples: usize) -> Verification {
    let mut v = Verification {
        passed: true,
        empty_witness: cert.witness.is_empty(),
        points_checked: 0,
        first_failure: None,
        diagnostics: Vec::new(),
    };
    let fail = |v: &mut Verification, msg: String| {
        v.passed = false;
        v.diagnostics.push(msg);
    };
    if samples < 100 {
        fail(&mut v, format!("at least 100 samples are required, got {samples}"));
        return v;
    }
    if cert.n != poles.len() {
        fail(&mut v, format!("certificate is for n = {}, pole set has {}", cert.n, poles.len()));
        return v;
    }
    if !(cert.delta > 0.0 && cert.delta < 0.5) {
        fail(&mut v, format!("delta = {} is outside (0, 1/2)", cert.delta));
        return v;
    }
    if v.empty_witness {
        v.diagnostics.push("witness is empty; pointwise check is vacuous".into());
    }

    let threshold = cert.delta * cert.n as f64;
    let strict = cert.case_tag == CaseTag::Case2;
    let slack = 1e-9 * threshold.max(1.0);
    'outer: for &(a, b) in cert.witness.intervals() {
        for i in 0..=samples + 1 {
            let x = if i == samples + 1 { b } else { a + (b - a) * i as f64 / (samples + 1) as f64 };
            v.points_checked += 1;
            let f = poles.eval_level(x).map(f64::abs).unwrap_or(f64::INFINITY);
            let ok = if strict { f > threshold } else { f >= threshold - slack };
            if !ok {
                v.first_failure = Some(x);
                fail(&mut v, format!("|F({x})| = {f} misses the level {threshold}"));
                break 'outer;
            }
        }
    }

    if !cert.witness.is_subset_of(&delta_window(cert.n, cert.delta)) {
        fail(&mut v, "witness is not contained in the endpoint window".into());
    }
    let measure = cert.witness.measure();
    if (measure - cert.guaranteed_measure).abs() > 1e-12 * measure.max(1e-300) {
        fail(&mut v, format!("witness measure {measure} differs from the recorded {}", cert.guaranteed_measure));
    }
    let floor = match cert.case_tag {
        CaseTag::Case1Plus | CaseTag::Case1Minus => 5.0 * cert.rho / 4.0,
        CaseTag::Case2 => k_delta(cert.delta) / (cert.n as f64).powf(1.0 + 1.0 / (cert.m + 1) as f64) * (1.0 - 1e-12),
    };
    if !(cert.guaranteed_measure > floor || (strict && cert.guaranteed_measure >= floor)) {
        fail(&mut v, format!("guaranteed measure {} is below its floor {floor}", cert.guaranteed_measure));
    }
    v
}

/// Whether `S**` lies inside the exact level set `E_delta`.
pub fn s_double_star_check(poles: &PoleSet, delta: f64) -> Result<bool, CertificateError> {
    check_delta_m(delta, 1)?;
    let e = level_set(poles, &LevelQuery::for_poles(delta, poles)?)?;
    let s = s_double_star(poles.len(), delta);
    Ok(s.intersect(&e).measure() >= s.measure() * (1.0 - 1e-9))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extremal::{level_set_gtilde, to_poleset};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    fn lp(rho: f64, h: f64) -> LemmaParams {
        LemmaParams::new(rho, h).unwrap()
    }

    #[test]
    fn threshold_examples() {
        assert_abs_diff_eq!(threshold_t(&lp(0.25, 1.0)), 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(threshold_t(&lp(0.25, 2.0)), 13f64.sqrt() / 4.0, epsilon = 1e-15);
        assert!(threshold_t(&lp(0.25, 1.0)) < threshold_t(&lp(0.25, 1.5)));
        assert!(threshold_t(&lp(0.25, 1.5)) < threshold_t(&lp(0.25, 2.0)));
        assert!(LemmaParams::new(0.25, 2.5).is_err());
        assert!(LemmaParams::new(0.25, 0.9).is_err());
        assert!(LemmaParams::new(0.3, 1.0).is_err());
    }

    #[test]
    fn segment_examples() {
        let (lo, hi) = guarantee_segment(&lp(0.25, 1.0));
        assert_abs_diff_eq!(lo, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(hi, 0.75, epsilon = 1e-15);
        let (lo, hi) = guarantee_segment(&lp(0.25, 2.0));
        assert_abs_diff_eq!(lo, (3.25f64.sqrt() - 0.5) / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(hi, (3.25f64.sqrt() + 0.5) / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(lo, 0.434259, epsilon = 1e-6);
        assert_abs_diff_eq!(hi, 0.767593, epsilon = 2e-6);
        for rho in [0.05, 0.1, 0.25] {
            let (s_lo, _) = s_star(rho).unwrap();
            assert_abs_diff_eq!(guarantee_segment(&lp(rho, 1.0 / (2.0 * rho))).0, s_lo, epsilon = 1e-14);
        }
    }

    #[test]
    fn s_star_examples() {
        let (lo, hi) = s_star(0.25).unwrap();
        assert_abs_diff_eq!(lo, 0.434259, epsilon = 1e-6);
        assert_eq!(hi, 0.75);
        assert!(hi - lo > 5.0 * 0.25 / 4.0);
        let (lo, hi) = s_star(1e-6).unwrap();
        assert!(hi - lo < 1e-5 && lo > 0.99999);
        for rho in [1e-4, 0.01, 0.1, 0.2, 0.25] {
            let (lo, hi) = s_star(rho).unwrap();
            assert!(lo > 1.0 - 3.0 * rho);
            assert!(hi - lo > 5.0 * rho / 4.0);
        }
        assert!(s_star(0.0).is_err());
    }

    #[test]
    fn s_star_inclusion_and_monotone_endpoints() {
        for rho in [0.05, 0.1, 0.25] {
            let (s_lo, s_hi) = s_star(rho).unwrap();
            let top = 1.0 / (2.0 * rho);
            let mut prev_lo = f64::NEG_INFINITY;
            for i in 0..64 {
                let h = 1.0 + (top - 1.0) * i as f64 / 63.0;
                let (lo, hi) = guarantee_segment(&lp(rho, h));
                assert!(lo <= s_lo + 1e-15 && s_hi <= hi + 1e-15, "rho={rho} h={h}");
                assert!(lo >= prev_lo);
                assert!(hi >= 1.0 - rho - 1e-15);
                prev_lo = lo;
            }
        }
    }

    #[test]
    fn lemma1_examples() {
        assert!(lemma1_predicate(0.0, &lp(0.25, 1.0), 0.5).unwrap());
        assert!(lemma1_predicate(0.0, &lp(0.25, 2.0), 0.5).unwrap());
        let params = lp(0.25, 2.0);
        let (_, hi) = guarantee_segment(&params);
        let v = threshold_t(&params).acos();
        assert!(lemma1_predicate(v, &params, hi).unwrap());
        assert!(lemma1_predicate(FRAC_PI_2, &params, 0.5).is_err());
        assert!(lemma1_predicate(0.0, &params, 0.9).is_err());
    }

    #[test]
    fn lemma1_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let rho = rng.gen_range(1e-4..=0.25);
            let h = rng.gen_range(1.0..=1.0 / (2.0 * rho));
            let params = lp(rho, h);
            let t = threshold_t(&params);
            let d = rng.gen_range(t..=1.0);
            let v = d.acos() * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let (lo, hi) = guarantee_segment(&params);
            let x = rng.gen_range(lo..=hi);
            match lemma1_predicate(v, &params, x) {
                Ok(holds) => assert!(holds, "rho={rho} h={h} v={v} x={x}"),
                // acos/cos round trips can drop just below T.
                Err(CertificateError::PreconditionViolation(_)) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn lemma2_examples() {
        let [(a, b), (c, d)] = lemma2_window(&lp(0.25, 1.0), 1.0).unwrap();
        assert_eq!((a, d), (-1.0, 1.0));
        assert_abs_diff_eq!(b, -1.0 + 0.1875, epsilon = 1e-15);
        assert_abs_diff_eq!(c, 1.0 - 0.1875, epsilon = 1e-15);
        let limit = 4.0 / (3.0 * 0.25);
        let [(_, b), _] = lemma2_window(&lp(0.25, 1.0), limit * (1.0 - 1e-12)).unwrap();
        assert_abs_diff_eq!(b, 0.0, epsilon = 1e-11);
        assert!(lemma2_window(&lp(0.25, 1.0), limit).is_err());
        let [_, (c, _)] = lemma2_window(&lp(0.25, 1.0), 0.5).unwrap();
        assert_abs_diff_eq!(c, 0.90625, epsilon = 1e-15);
        let p = poisson_kernel(FRAC_PI_2, 0.95).unwrap();
        assert_abs_diff_eq!(p, 0.0975 / 1.9025, epsilon = 1e-15);
        assert!(p < 0.5);
    }

    #[test]
    fn lemma2_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10_000 {
            let rho = rng.gen_range(1e-4..=0.25);
            let h = rng.gen_range(1.0..=1.0 / (2.0 * rho));
            let params = lp(rho, h);
            let t = threshold_t(&params);
            let d = rng.gen_range(-t..t);
            let v = d.acos() * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            if v.cos().abs() >= t {
                continue;
            }
            let s = rng.gen_range(0.0..4.0 * h / (3.0 * rho));
            if s == 0.0 {
                continue;
            }
            let [(_, b), (c, _)] = lemma2_window(&params, s).unwrap();
            let x = if rng.gen_bool(0.5) { rng.gen_range(-1.0..=b) } else { rng.gen_range(c..=1.0) };
            let p = poisson_kernel(v, x).unwrap();
            assert!(p < s, "rho={rho} h={h} v={v} s={s} x={x} P={p}");
        }
    }

    #[test]
    fn partition_examples() {
        let all_one = PoleSet::new(vec![0.0; 5]).unwrap();
        let p = partition(&all_one, 0.25, 3).unwrap();
        assert_eq!(p.classes[0].len(), 5);
        assert_eq!(p.alpha_table[0].0, 5.0);

        let all_i = PoleSet::new(vec![FRAC_PI_2; 5]).unwrap();
        let p = partition(&all_i, 0.25, 3).unwrap();
        assert_eq!(p.classes[4].len(), 5);
        assert!(p.alpha_table.iter().all(|r| r.0 == 0.0));
        assert_eq!(p.signed_counts[4].positive + p.signed_counts[4].negative + p.signed_counts[4].zero, 5);

        let one = PoleSet::new(vec![2.0]).unwrap();
        let p = partition(&one, 0.3, 2).unwrap();
        assert_eq!(p.classes.iter().map(Vec::len).sum::<usize>(), 1);
        assert!(partition(&one, 0.5, 2).is_err());
        assert!(partition(&one, 0.3, 0).is_err());
    }

    #[test]
    fn h_table_shape() {
        let poles = PoleSet::new(vec![0.3; 8]).unwrap();
        let p = partition(&poles, 0.2, 3).unwrap();
        assert_abs_diff_eq!(p.h_table[0], 1.0 / (2.0 * p.rho), epsilon = 1e-12);
        assert!(p.h_table[3] > 1.0);
        assert!(p.h_table.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn case1_example() {
        let poles = PoleSet::new(vec![0.0, 0.0]).unwrap();
        let c = theorem2_witness(&poles, 0.25, 3).unwrap();
        assert_eq!(c.case_tag, CaseTag::Case1Plus);
        assert_abs_diff_eq!(c.rho, 1.0 / 12.0, epsilon = 1e-15);
        let (lo, hi) = c.witness.intervals()[0];
        assert_abs_diff_eq!(lo, ((1.0 - 3.0 / 144.0f64).sqrt() - 1.0 / 12.0) / (1.0 + 1.0 / 6.0), epsilon = 1e-15);
        assert_abs_diff_eq!(lo, 0.776727, epsilon = 2e-5);
        assert_abs_diff_eq!(hi, 0.916667, epsilon = 1e-6);
        assert_abs_diff_eq!(poles.eval_level(0.9).unwrap(), -18.0, epsilon = 1e-12);
        assert!(verify_certificate(&poles, &c, 100).passed);
    }

    #[test]
    fn case1_minus_side() {
        let poles = PoleSet::new(vec![PI, PI - 1e-3, 2.0]).unwrap();
        let c = theorem2_witness(&poles, 0.2, 3).unwrap();
        assert_eq!(c.case_tag, CaseTag::Case1Minus);
        assert!(c.witness.intervals()[0].1 < 0.0);
        assert!(verify_certificate(&poles, &c, 200).passed);
    }

    #[test]
    fn case2_example() {
        let poles = PoleSet::new(vec![FRAC_PI_2; 4]).unwrap();
        let c = theorem2_witness(&poles, 0.2, 1).unwrap();
        assert_eq!(c.case_tag, CaseTag::Case2);
        assert_abs_diff_eq!(k_delta(0.2), 0.028699, epsilon = 1e-6);
        let (lo, _) = c.witness.intervals()[1];
        assert_abs_diff_eq!(lo, 0.998206, epsilon = 1e-6);
        assert!(poles.eval_level(0.9982).unwrap() > 0.8);
        assert_abs_diff_eq!(c.guaranteed_measure, k_delta(0.2) / 8.0, epsilon = 1e-15);
        assert!(verify_certificate(&poles, &c, 100).passed);
    }

    #[test]
    fn corrupted_certificate_is_rejected() {
        // The extremal family has an exactly known level set; a witness 10%
        // wider than its right component must fail.
        let n = 4;
        let delta = 0.3;
        let poles = to_poleset(n);
        let mut c = theorem2_witness(&poles, delta, 3).unwrap();
        let (a, b) = level_set_gtilde(n, delta).intervals()[1];
        let widened = (b - 1.1 * (b - a)).max(-1.0);
        c.witness = IntervalUnion::new(vec![(widened, b)]).unwrap();
        c.guaranteed_measure = c.witness.measure();
        let v = verify_certificate(&poles, &c, 200);
        assert!(!v.passed);
        assert!(v.first_failure.is_some());
    }

    #[test]
    fn empty_witness_is_flagged() {
        let poles = PoleSet::new(vec![1.0]).unwrap();
        let mut c = theorem2_witness(&poles, 0.2, 3).unwrap();
        c.witness = IntervalUnion::empty();
        let v = verify_certificate(&poles, &c, 100);
        assert!(v.empty_witness);
        assert_eq!(v.points_checked, 0);
        assert!(v.diagnostics.iter().any(|d| d.contains("vacuous")));
    }

    #[test]
    fn too_few_samples_fail() {
        let poles = PoleSet::new(vec![1.0]).unwrap();
        let c = theorem2_witness(&poles, 0.2, 3).unwrap();
        assert!(!verify_certificate(&poles, &c, 10).passed);
    }

    #[test]
    fn soundness_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(500);
        for _ in 0..500 {
            let n = rng.gen_range(1..=12);
            let poles = PoleSet::random(n, &mut rng);
            for delta in [0.1, 0.25, 0.4] {
                for m in 1..=3 {
                    let c = theorem2_witness(&poles, delta, m).unwrap();
                    let v = verify_certificate(&poles, &c, 100);
                    assert!(v.passed, "n={n} delta={delta} m={m}: {:?}", v.diagnostics);
                }
            }
        }
    }

    #[test]
    fn clustered_configurations_are_sound() {
        let mut rng = ChaCha8Rng::seed_from_u64(501);
        for _ in 0..200 {
            let n = rng.gen_range(1..=12);
            let center = rng.gen_range(0.0..TAU);
            let spread = 10f64.powf(rng.gen_range(-8.0..0.0));
            let angles = (0..n).map(|_| center + rng.gen_range(-spread..spread)).collect();
            let poles = PoleSet::new(angles).unwrap();
            for delta in [0.1, 0.25, 0.4] {
                let c = theorem2_witness(&poles, delta, DEFAULT_M).unwrap();
                assert!(verify_certificate(&poles, &c, 100).passed);
            }
        }
    }

    #[test]
    fn sweep_over_m() {
        let poles = PoleSet::new(vec![0.2, 1.9, 3.3, 4.0]).unwrap();
        let certs = witness_sweep(&poles, 0.25, 8).unwrap();
        assert_eq!(certs.len(), 8);
        assert!(certs.iter().all(|c| verify_certificate(&poles, c, 100).passed));
    }

    #[test]
    fn case2_caps_grow_toward_s_double_star() {
        for n in [2, 5, 12] {
            let limit = 1.0 - k_delta(0.3) / (2.0 * n as f64);
            let mut prev = 1.0;
            for m in 1..=8 {
                let edge = s_tilde(n, 0.3, m).intervals()[1].0;
                assert!(edge < prev && edge > limit);
                prev = edge;
            }
        }
    }

    #[test]
    fn s_double_star_inside_level_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(502);
        for _ in 0..100 {
            let n = rng.gen_range(1..=12);
            let poles = PoleSet::random(n, &mut rng);
            let c = theorem2_witness(&poles, 0.25, 3).unwrap();
            if c.case_tag == CaseTag::Case2 {
                assert!(s_double_star_check(&poles, 0.25).unwrap());
            }
        }
    }

    #[test]
    fn certificate_json_round_trip() {
        let poles = PoleSet::new(vec![0.4, 2.2, 5.5]).unwrap();
        let c = theorem2_witness(&poles, 0.2, 3).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains("\"caseTag\"") && json.contains("\"alphaTable\"") && json.contains("\"hTable\""));
        let back: Certificate = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }
}
