//! Pure numerical building blocks: normalization, Shannon entropy, ratios,
//! editing depth, democracy-weighted scores, midrank percentiles and ordinary
//! least squares.
//!
//! Every function is side-effect free and safe to call from any thread.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("distribution has no positive mass")]
    EmptyDistribution,
    #[error("invalid magnitude {0} (must be finite and non-negative)")]
    InvalidMagnitude(f64),
    #[error("percentile requested against an empty cohort")]
    EmptyCohort,
    #[error("value is not comparable (NaN)")]
    NotComparable,
    #[error("linear fit needs at least two points, got {0}")]
    InsufficientPoints(usize),
    #[error("linear fit is degenerate: x has zero variance")]
    DegenerateFit,
    #[error("democracy index score {0} outside [0, 1]")]
    IndexOutOfRange(f64),
}

/// Neumaier compensated sum.
fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// A probability mass function over keys. Zero-mass keys are never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityDistribution<K: Ord> {
    entries: BTreeMap<K, f64>,
}

impl<K: Ord> ProbabilityDistribution<K> {
    pub fn get(&self, key: &K) -> Option<f64> {
        self.entries.get(key).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, f64)> {
        self.entries.iter().map(|(k, p)| (k, *p))
    }

    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    pub fn into_entries(self) -> BTreeMap<K, f64> {
        self.entries
    }
}

/// Scales magnitudes to probabilities, dropping zero-mass keys.
pub fn normalize<K, I>(counts: I) -> Result<ProbabilityDistribution<K>, MetricsError>
where
    K: Ord,
    I: IntoIterator<Item = (K, f64)>,
{
    let mut positive = Vec::new();
    for (k, m) in counts {
        if !m.is_finite() || m < 0.0 {
            return Err(MetricsError::InvalidMagnitude(m));
        }
        if m > 0.0 {
            positive.push((k, m));
        }
    }
    let total = compensated_sum(positive.iter().map(|(_, m)| *m));
    if positive.is_empty() || total <= 0.0 {
        return Err(MetricsError::EmptyDistribution);
    }
    let mut entries = BTreeMap::new();
    for (k, m) in positive {
        *entries.entry(k).or_insert(0.0) += m / total;
    }
    Ok(ProbabilityDistribution { entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogBase {
    #[default]
    Natural,
    Two,
}

/// Shannon entropy. `nats` is always in natural units; `base` records the
/// unit the caller asked to report in (see [`EntropyValue::in_base`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyValue {
    pub nats: f64,
    pub support_size: usize,
    pub base: LogBase,
}

impl EntropyValue {
    pub fn in_base(&self) -> f64 {
        match self.base {
            LogBase::Natural => self.nats,
            LogBase::Two => self.nats / std::f64::consts::LN_2,
        }
    }
}

/// `S = -sum(p ln p)` in nats, reported in the natural base.
pub fn shannon_entropy<K: Ord>(dist: &ProbabilityDistribution<K>) -> EntropyValue {
    shannon_entropy_in(dist, LogBase::Natural)
}

pub fn shannon_entropy_in<K: Ord>(dist: &ProbabilityDistribution<K>, base: LogBase) -> EntropyValue {
    // Zero-mass keys are never stored, so 0 ln 0 never arises; the guard keeps
    // the convention explicit anyway.
    let s = -compensated_sum(
        dist.entries.values().map(|&p| if p > 0.0 { p * p.ln() } else { 0.0 }),
    );
    EntropyValue { nats: s.max(0.0), support_size: dist.support_size(), base }
}

/// `numerator / denominator`, or `None` when the denominator is zero.
pub fn ratio(numerator: u64, denominator: u64) -> Option<f64> {
    (denominator != 0).then(|| numerator as f64 / denominator as f64)
}

/// `(edits/articles) * ((total_pages - articles)/articles) * (1 - stub_ratio)`.
pub fn editing_depth(edits: u64, articles: u64, total_pages: u64, stub_ratio: f64) -> Option<f64> {
    if articles == 0 {
        return None;
    }
    let a = articles as f64;
    let non_articles = total_pages.saturating_sub(articles) as f64;
    let stub_ratio = stub_ratio.clamp(0.0, 1.0);
    Some((edits as f64 / a) * (non_articles / a) * (1.0 - stub_ratio))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemocraticScore {
    /// Mean index score over covered mass; `None` when nothing is covered.
    pub score: Option<f64>,
    /// Probability mass of countries present in the index.
    pub coverage: f64,
}

/// Weighted mean of per-country index scores, renormalized over the mass of
/// countries the index covers.
pub fn democratic_quality_score<K: Ord>(
    dist: &ProbabilityDistribution<K>,
    index: &BTreeMap<K, f64>,
) -> Result<DemocraticScore, MetricsError> {
    if let Some(bad) = index.values().find(|d| !(0.0..=1.0).contains(*d)) {
        return Err(MetricsError::IndexOutOfRange(*bad));
    }
    let covered: Vec<(f64, f64)> = dist
        .iter()
        .filter_map(|(k, p)| index.get(k).map(|d| (p, *d)))
        .collect();
    let coverage = compensated_sum(covered.iter().map(|(p, _)| *p)).min(1.0);
    if coverage <= 0.0 {
        return Ok(DemocraticScore { score: None, coverage: 0.0 });
    }
    let weighted = compensated_sum(covered.iter().map(|(p, d)| p * d));
    Ok(DemocraticScore { score: Some((weighted / coverage).clamp(0.0, 1.0)), coverage })
}

/// Midrank percentile: `(#{c < v} + #{c <= v}) / (2 |cohort|)`.
pub fn percentile_rank(value: f64, cohort: &[f64]) -> Result<f64, MetricsError> {
    if cohort.is_empty() {
        return Err(MetricsError::EmptyCohort);
    }
    if value.is_nan() || cohort.iter().any(|c| c.is_nan()) {
        return Err(MetricsError::NotComparable);
    }
    let below = cohort.iter().filter(|&&c| c < value).count();
    let at_or_below = cohort.iter().filter(|&&c| c <= value).count();
    Ok((below + at_or_below) as f64 / (2 * cohort.len()) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

impl LinearFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Ordinary least squares `y = intercept + slope * x`.
///
/// `r_squared` is `1 - SS_res / SS_tot`, taken as 1 when `y` is constant
/// (the fit is then exact).
pub fn linear_fit(points: &[(f64, f64)]) -> Result<LinearFit, MetricsError> {
    let n = points.len();
    if n < 2 {
        return Err(MetricsError::InsufficientPoints(n));
    }
    let nf = n as f64;
    let mean_x = compensated_sum(points.iter().map(|p| p.0)) / nf;
    let mean_y = compensated_sum(points.iter().map(|p| p.1)) / nf;
    let sxx = compensated_sum(points.iter().map(|p| (p.0 - mean_x).powi(2)));
    let sxy = compensated_sum(points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)));
    let syy = compensated_sum(points.iter().map(|p| (p.1 - mean_y).powi(2)));
    if sxx == 0.0 || !sxx.is_finite() {
        return Err(MetricsError::DegenerateFit);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res = compensated_sum(points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)));
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - ss_res / syy).clamp(0.0, 1.0) };
    Ok(LinearFit { slope, intercept, r_squared, n_points: n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn dist(pairs: &[(&'static str, f64)]) -> ProbabilityDistribution<&'static str> {
        normalize(pairs.iter().copied()).unwrap()
    }

    /// Direct `-sum p ln p`, deliberately naive.
    fn entropy_oracle(ps: &[f64]) -> f64 {
        let mut s = 0.0;
        for &p in ps {
            if p > 0.0 {
                s -= p * p.ln();
            }
        }
        s
    }

    #[test]
    fn normalize_examples() {
        let d = dist(&[("A", 30.0), ("B", 60.0), ("C", 10.0)]);
        assert_abs_diff_eq!(d.get(&"A").unwrap(), 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(d.get(&"B").unwrap(), 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(d.get(&"C").unwrap(), 0.1, epsilon = 1e-12);
        assert_eq!(dist(&[("A", 5.0)]).get(&"A"), Some(1.0));
        assert_eq!(normalize([("A", 0.0), ("B", 0.0)]), Err::<ProbabilityDistribution<&str>, _>(MetricsError::EmptyDistribution));
        assert_eq!(normalize(Vec::<(&str, f64)>::new()), Err(MetricsError::EmptyDistribution));
        assert!(normalize([("A", -1.0)]).is_err());
        let d = dist(&[("A", 0.0), ("B", 2.0)]);
        assert_eq!(d.support_size(), 1);
    }

    #[test]
    fn entropy_examples() {
        let u = dist(&[("A", 1.0), ("B", 1.0), ("C", 1.0), ("D", 1.0)]);
        assert_abs_diff_eq!(shannon_entropy(&u).nats, 1.3862943611198906, epsilon = 1e-12);
        assert_eq!(shannon_entropy(&dist(&[("A", 1.0)])).nats, 0.0);

        // Oracle computed before the implementation: -(0.3 ln 0.3 + 0.6 ln 0.6 + 0.1 ln 0.1).
        let expected = entropy_oracle(&[0.3, 0.6, 0.1]);
        assert_abs_diff_eq!(expected, 0.897_945_724_856_779_7, epsilon = 1e-12);
        let d = dist(&[("A", 0.3), ("B", 0.6), ("C", 0.1)]);
        assert_abs_diff_eq!(shannon_entropy(&d).nats, expected, epsilon = 1e-12);
    }

    #[test]
    fn entropy_in_bits() {
        let u = dist(&[("A", 1.0), ("B", 1.0)]);
        let e = shannon_entropy_in(&u, LogBase::Two);
        assert_abs_diff_eq!(e.in_base(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.nats, std::f64::consts::LN_2, epsilon = 1e-12);
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(ratio(12, 4800), Some(0.0025));
        assert_eq!(ratio(0, 100), Some(0.0));
        assert_eq!(ratio(5, 0), None);
    }

    #[test]
    fn editing_depth_examples() {
        // 1e6/1e5 = 10; (3e5 - 1e5)/1e5 = 2; 1 - 0.5 = 0.5.
        assert_abs_diff_eq!(editing_depth(1_000_000, 100_000, 300_000, 0.5).unwrap(), 10.0, epsilon = 1e-12);
        assert_eq!(editing_depth(1_000_000, 100_000, 300_000, 1.0), Some(0.0));
        assert_eq!(editing_depth(10, 0, 5, 0.1), None);
    }

    #[test]
    fn democracy_examples() {
        let idx = |pairs: &[(&'static str, f64)]| pairs.iter().copied().collect::<BTreeMap<_, _>>();
        let s = democratic_quality_score(&dist(&[("X", 1.0)]), &idx(&[("X", 0.8)])).unwrap();
        assert_eq!(s, DemocraticScore { score: Some(0.8), coverage: 1.0 });

        let s = democratic_quality_score(&dist(&[("X", 0.5), ("Y", 0.5)]), &idx(&[("X", 1.0), ("Y", 0.0)])).unwrap();
        assert_abs_diff_eq!(s.score.unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.coverage, 1.0, epsilon = 1e-12);

        // (0.5*0.8 + 0.25*0.4) / 0.75 = 0.5 / 0.75.
        let s = democratic_quality_score(
            &dist(&[("X", 0.5), ("Y", 0.25), ("Z", 0.25)]),
            &idx(&[("X", 0.8), ("Y", 0.4)]),
        )
        .unwrap();
        assert_abs_diff_eq!(s.coverage, 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(s.score.unwrap(), 2.0 / 3.0, epsilon = 1e-9);

        let s = democratic_quality_score(&dist(&[("X", 1.0)]), &idx(&[("Q", 0.3)])).unwrap();
        assert_eq!(s.score, None);
        assert!(democratic_quality_score(&dist(&[("X", 1.0)]), &idx(&[("X", 1.5)])).is_err());
    }

    #[test]
    fn percentile_examples() {
        assert_eq!(percentile_rank(5.0, &[1.0, 2.0, 5.0, 9.0]).unwrap(), 0.625);
        assert_eq!(percentile_rank(1.0, &[1.0, 2.0, 5.0, 9.0]).unwrap(), 0.125);
        assert_eq!(percentile_rank(3.0, &[3.0]).unwrap(), 0.5);
        assert_eq!(percentile_rank(3.0, &[]), Err(MetricsError::EmptyCohort));
        assert_eq!(percentile_rank(f64::NAN, &[1.0]), Err(MetricsError::NotComparable));
        // ties share a rank
        assert_eq!(percentile_rank(2.0, &[2.0, 2.0, 2.0]).unwrap(), 0.5);
    }

    #[test]
    fn linear_fit_examples() {
        let f = linear_fit(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]).unwrap();
        assert_abs_diff_eq!(f.slope, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.intercept, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.r_squared, 1.0, epsilon = 1e-12);

        let f = linear_fit(&[(0.0, 1.0), (1.0, 1.0), (2.0, 1.0)]).unwrap();
        assert_abs_diff_eq!(f.slope, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.intercept, 1.0, epsilon = 1e-12);

        // Normal equations by hand: n=3, sx=3, sy=5, sxx=5, sxy=8
        // slope = (3*8 - 3*5)/(3*5 - 9) = 9/6 = 1.5; intercept = (5 - 1.5*3)/3 = 1/6.
        let f = linear_fit(&[(0.0, 0.0), (1.0, 2.0), (2.0, 3.0)]).unwrap();
        assert_abs_diff_eq!(f.slope, 1.5, epsilon = 1e-9);
        assert_abs_diff_eq!(f.intercept, 1.0 / 6.0, epsilon = 1e-9);
        assert_eq!(f.n_points, 3);

        assert_eq!(linear_fit(&[(1.0, 0.0), (1.0, 5.0)]), Err(MetricsError::DegenerateFit));
        assert_eq!(linear_fit(&[(1.0, 0.0)]), Err(MetricsError::InsufficientPoints(1)));
    }

    fn magnitudes() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1e6, 1..60).prop_filter("needs mass", |v| v.iter().any(|m| *m > 0.0))
    }

    fn keyed(v: &[f64]) -> Vec<(usize, f64)> {
        v.iter().copied().enumerate().collect()
    }

    proptest! {
        #[test]
        fn entropy_bounded(ms in magnitudes()) {
            let d = normalize(keyed(&ms)).unwrap();
            let s = shannon_entropy(&d);
            prop_assert!(s.nats >= 0.0);
            prop_assert!(s.nats <= (s.support_size as f64).ln() + 1e-9);
            let total: f64 = d.iter().map(|(_, p)| p).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }

        #[test]
        fn entropy_permutation_invariant(ms in magnitudes(), shift in 1usize..50) {
            let a = shannon_entropy(&normalize(keyed(&ms)).unwrap()).nats;
            let relabeled: Vec<(usize, f64)> = ms.iter().enumerate().map(|(i, m)| ((i + shift) % ms.len() + 1000 * i, *m)).collect();
            let b = shannon_entropy(&normalize(relabeled).unwrap()).nats;
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn merging_never_increases_entropy(ms in prop::collection::vec(0.0f64..1e6, 2..60), i in 0usize..60, j in 0usize..60) {
            prop_assume!(ms.iter().any(|m| *m > 0.0));
            let (i, j) = (i % ms.len(), j % ms.len());
            prop_assume!(i != j);
            let before = shannon_entropy(&normalize(keyed(&ms)).unwrap()).nats;
            let merged: Vec<(usize, f64)> = ms.iter().enumerate().map(|(k, m)| (if k == j { i } else { k }, *m)).collect();
            let after = shannon_entropy(&normalize(merged).unwrap()).nats;
            prop_assert!(after <= before + 1e-12);
        }

        #[test]
        fn normalize_scale_invariant(ms in magnitudes(), lambda in 1e-3f64..1e3) {
            let a = normalize(keyed(&ms)).unwrap();
            let scaled: Vec<f64> = ms.iter().map(|m| m * lambda).collect();
            let b = normalize(keyed(&scaled)).unwrap();
            for ((ka, pa), (kb, pb)) in a.iter().zip(b.iter()) {
                prop_assert_eq!(ka, kb);
                prop_assert!((pa - pb).abs() < 1e-12);
            }
            prop_assert!((shannon_entropy(&a).nats - shannon_entropy(&b).nats).abs() < 1e-12);
        }

        #[test]
        fn democracy_within_covered_range(ms in magnitudes(), scores in prop::collection::vec(0.0f64..=1.0, 60)) {
            let d = normalize(keyed(&ms)).unwrap();
            let index: BTreeMap<usize, f64> = scores.iter().copied().enumerate().filter(|(i, _)| i % 3 != 0).collect();
            let s = democratic_quality_score(&d, &index).unwrap();
            let covered: Vec<f64> = d.iter().filter_map(|(k, _)| index.get(k).copied()).collect();
            match s.score {
                None => prop_assert!(covered.is_empty()),
                Some(v) => {
                    let lo = covered.iter().cloned().fold(f64::INFINITY, f64::min);
                    let hi = covered.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
                }
            }
        }

        #[test]
        fn percentile_monotone_and_order_free(cohort in prop::collection::vec(-1e3f64..1e3, 1..40), a in -1e3f64..1e3, b in -1e3f64..1e3) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(percentile_rank(lo, &cohort).unwrap() <= percentile_rank(hi, &cohort).unwrap());
            let mut rev = cohort.clone();
            rev.reverse();
            prop_assert_eq!(percentile_rank(a, &cohort).unwrap(), percentile_rank(a, &rev).unwrap());
            let p = percentile_rank(a, &cohort).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
        }

        #[test]
        fn residuals_orthogonal_to_x(pts in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 2..50)) {
            let Ok(fit) = linear_fit(&pts) else { return Ok(()); };
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
            let dot: f64 = pts.iter().map(|p| (p.1 - fit.predict(p.0)) * (p.0 - mx)).sum();
            let scale: f64 = pts.iter().map(|p| (p.0.abs() + 1.0) * (p.1.abs() + 1.0)).sum();
            prop_assert!(dot.abs() <= 1e-9 * scale);
            prop_assert!((0.0..=1.0).contains(&fit.r_squared));
        }
    }
}
