//! Time series values, subsequence views and the two distances everything
//! else is built on: the plain Euclidean distance between equal-length
//! sequences, and the subsequence distance (best sliding-window match).
//!
//! Distances are never length-normalized and subsequences are never
//! z-normalized. Tweaking edits raw values and is charged in raw Euclidean
//! cost, so the distance used for matching must live in the same space.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};

/// An ordered sequence of finite samples. Length is fixed at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeSeries(Vec<f64>);

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_values(&values, "time series")?;
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always false; kept for the `len`/`is_empty` pairing.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn subsequence(&self, start: usize, len: usize) -> Result<Subsequence<'_>> {
        if len == 0 || start + len > self.len() {
            return Err(contract(format!(
                "subsequence [{start}, {}) outside series of length {}",
                start + len,
                self.len()
            )));
        }
        Ok(Subsequence {
            source: self,
            start,
            len,
        })
    }

    /// Z-normalize the whole series (zero mean, unit variance). A constant
    /// series maps to all zeros.
    pub fn z_normalized(&self) -> Self {
        let n = self.len() as f64;
        let mean = self.0.iter().sum::<f64>() / n;
        let var = self.0.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let sd = var.sqrt();
        let values = if sd > 0.0 {
            self.0.iter().map(|v| (v - mean) / sd).collect()
        } else {
            vec![0.0; self.len()]
        };
        Self(values)
    }
}

impl TryFrom<Vec<f64>> for TimeSeries {
    type Error = crate::Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<TimeSeries> for Vec<f64> {
    fn from(ts: TimeSeries) -> Self {
        ts.0
    }
}

/// A series with its class label. Labels are opaque tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSeries {
    pub label: String,
    pub series: TimeSeries,
}

impl LabeledSeries {
    pub fn new(label: impl Into<String>, series: TimeSeries) -> Self {
        Self {
            label: label.into(),
            series,
        }
    }
}

/// A borrowed window `source[start..start + len]`.
#[derive(Debug, Clone, Copy)]
pub struct Subsequence<'a> {
    source: &'a TimeSeries,
    start: usize,
    len: usize,
}

impl<'a> Subsequence<'a> {
    pub fn start(&self) -> usize {
        self.start
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn values(&self) -> &'a [f64] {
        &self.source.values()[self.start..self.start + self.len]
    }
}

/// A materialized subsequence used as a split feature.
///
/// A shapelet may be *anchored* to one offset, in which case only the window
/// starting at that offset is considered when matching. Trained forests never
/// produce anchored shapelets; they exist so that position-probing toy
/// classifiers can be expressed with the same tree machinery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shapelet {
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    anchor: Option<usize>,
}

impl Shapelet {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_values(&values, "shapelet")?;
        Ok(Self {
            values,
            anchor: None,
        })
    }

    pub fn anchored(values: Vec<f64>, start: usize) -> Result<Self> {
        check_values(&values, "shapelet")?;
        Ok(Self {
            values,
            anchor: Some(start),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn anchor(&self) -> Option<usize> {
        self.anchor
    }

    /// Smallest series length this shapelet can be matched against.
    pub fn min_series_len(&self) -> usize {
        self.anchor.unwrap_or(0) + self.len()
    }

    /// Candidate window starts within a series of length `m`.
    pub fn window_starts(&self, m: usize) -> Result<Range<usize>> {
        if self.min_series_len() > m {
            return Err(contract(format!(
                "shapelet of length {} (anchor {:?}) does not fit a series of length {m}",
                self.len(),
                self.anchor
            )));
        }
        Ok(match self.anchor {
            Some(a) => a..a + 1,
            None => 0..m - self.len() + 1,
        })
    }
}

impl From<Subsequence<'_>> for Shapelet {
    fn from(sub: Subsequence<'_>) -> Self {
        Self {
            values: sub.values().to_vec(),
            anchor: None,
        }
    }
}

/// Best-matching window of a shapelet inside a series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchLocation {
    pub start: usize,
    pub distance: f64,
}

fn check_values(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(contract(format!("{what} must have at least one value")));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(contract(format!(
            "{what} value at index {i} is not finite ({})",
            values[i]
        )));
    }
    Ok(())
}

/// Euclidean distance between equal-length sequences.
pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(contract(format!(
            "euclidean distance of sequences with lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(contract("euclidean distance of empty sequences"));
    }
    Ok(squared_distance(a, b).sqrt())
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut ss = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        ss += d * d;
    }
    ss
}

/// Sum of squares, giving up (returning `None`) once the running sum exceeds
/// `bound`. When it does not give up the value is bit-identical to
/// [`squared_distance`].
#[inline]
fn squared_distance_bounded(a: &[f64], b: &[f64], bound: f64) -> Option<f64> {
    let mut ss = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        ss += d * d;
        if ss > bound {
            return None;
        }
    }
    Some(ss)
}

/// A squared-distance bound strictly above every `ss` with `sqrt(ss) <= d`.
#[inline]
fn abandon_bound(d: f64) -> f64 {
    if d.is_infinite() {
        f64::INFINITY
    } else {
        d * d * (1.0 + 1e-9) + f64::MIN_POSITIVE
    }
}

/// Minimum distance between `shapelet` and any equal-length window of
/// `series`. Ties go to the lowest start.
pub fn subsequence_distance(shapelet: &Shapelet, series: &[f64]) -> Result<MatchLocation> {
    best_match_where(shapelet, series, |_| true)?
        .ok_or_else(|| contract("no candidate window"))
}

/// Like [`subsequence_distance`] but restricted to windows whose start passes
/// `allowed`. `Ok(None)` when no window is allowed.
pub fn best_match_where(
    shapelet: &Shapelet,
    series: &[f64],
    allowed: impl Fn(usize) -> bool,
) -> Result<Option<MatchLocation>> {
    let starts = shapelet.window_starts(series.len())?;
    let s = shapelet.values();
    let l = s.len();
    let mut best: Option<MatchLocation> = None;
    let mut bound = f64::INFINITY;
    for start in starts {
        if !allowed(start) {
            continue;
        }
        if let Some(ss) = squared_distance_bounded(s, &series[start..start + l], bound) {
            let d = ss.sqrt();
            if best.is_none_or(|b| d < b.distance) {
                best = Some(MatchLocation { start, distance: d });
                bound = abandon_bound(d);
            }
        }
    }
    Ok(best)
}

/// Every window within `theta` of the shapelet, ascending by start.
pub fn matches_within(shapelet: &Shapelet, series: &[f64], theta: f64) -> Result<Vec<MatchLocation>> {
    let starts = shapelet.window_starts(series.len())?;
    let s = shapelet.values();
    let bound = abandon_bound(theta);
    Ok(starts
        .filter_map(|start| {
            let ss = squared_distance_bounded(s, &series[start..start + s.len()], bound)?;
            let d = ss.sqrt();
            (d <= theta).then_some(MatchLocation { start, distance: d })
        })
        .collect())
}

/// `subsequence_distance(shapelet, series) <= theta`, stopping at the first
/// qualifying window.
pub fn any_within(shapelet: &Shapelet, series: &[f64], theta: f64) -> Result<bool> {
    let starts = shapelet.window_starts(series.len())?;
    let s = shapelet.values();
    let bound = abandon_bound(theta);
    for start in starts {
        if let Some(ss) = squared_distance_bounded(s, &series[start..start + s.len()], bound) {
            if ss.sqrt() <= theta {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sh(v: &[f64]) -> Shapelet {
        Shapelet::new(v.to_vec()).unwrap()
    }

    // Exhaustive scan written independently of the abandoning search.
    fn brute_best(s: &[f64], t: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for start in 0..=t.len() - s.len() {
            let d = s
                .iter()
                .zip(&t[start..])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if d < best.1 {
                best = (start, d);
            }
        }
        best
    }

    #[test]
    fn euclidean_basics() {
        assert_eq!(euclidean_distance(&[1.5, -2.0, 0.0], &[1.5, -2.0, 0.0]).unwrap(), 0.0);
        assert_eq!(euclidean_distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert!(euclidean_distance(&[0.0], &[0.0, 1.0]).is_err());
        assert!(euclidean_distance(&[], &[]).is_err());
    }

    #[test]
    fn euclidean_seeded_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        let a: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut acc = 0.0f64;
        for i in 0..64 {
            acc += (a[i] - b[i]).powi(2);
        }
        let got = euclidean_distance(&a, &b).unwrap();
        assert!((got - acc.sqrt()).abs() <= 1e-12 * acc.sqrt());
    }

    #[test]
    fn subsequence_examples() {
        let m = subsequence_distance(&sh(&[1.0, 2.0]), &[0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m, MatchLocation { start: 1, distance: 0.0 });

        let t = [0.3, -1.0, 2.0];
        let m = subsequence_distance(&sh(&t), &t).unwrap();
        assert_eq!(m, MatchLocation { start: 0, distance: 0.0 });

        // windows: [0,1] -> sqrt(41), [1,2] -> 5, [2,3] -> sqrt(13)
        let m = subsequence_distance(&sh(&[5.0, 5.0]), &[0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m.start, 2);
        assert_eq!(m.distance, 13f64.sqrt());
        assert_eq!(brute_best(&[5.0, 5.0], &[0.0, 1.0, 2.0, 3.0]), (2, 13f64.sqrt()));

        assert!(subsequence_distance(&sh(&[1.0, 2.0, 3.0]), &[1.0, 2.0]).is_err());
    }

    #[test]
    fn ties_go_to_lowest_start() {
        let m = subsequence_distance(&sh(&[1.0]), &[0.0, 2.0, 0.0]).unwrap();
        assert_eq!(m.start, 0);
    }

    #[test]
    fn matches_within_examples() {
        let s = sh(&[0.0, 0.0]);
        let t = [0.0, 0.0, 5.0, 0.0, 0.0];
        let starts: Vec<_> = matches_within(&s, &t, 0.1).unwrap().iter().map(|m| m.start).collect();
        assert_eq!(starts, vec![0, 3]);
        assert!(matches_within(&s, &t, -1.0).unwrap().is_empty());
        assert_eq!(matches_within(&s, &t, 1e300).unwrap().len(), 4);
    }

    #[test]
    fn anchored_shapelet_only_sees_its_window() {
        let s = Shapelet::anchored(vec![1.0], 2).unwrap();
        let m = subsequence_distance(&s, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        assert_eq!(m, MatchLocation { start: 2, distance: 1.0 });
        assert!(subsequence_distance(&s, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(TimeSeries::new(vec![1.0, f64::NAN]).is_err());
        assert!(TimeSeries::new(vec![]).is_err());
        assert!(Shapelet::new(vec![f64::INFINITY]).is_err());
    }

    fn small_vec(max: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, 1..max)
    }

    proptest! {
        #[test]
        fn euclidean_metric_axioms(a in small_vec(16), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b: Vec<f64> = a.iter().map(|_| rng.gen_range(-10.0..10.0)).collect();
            let ab = euclidean_distance(&a, &b).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab, euclidean_distance(&b, &a).unwrap());
            prop_assert_eq!(euclidean_distance(&a, &a).unwrap(), 0.0);
            if a != b {
                prop_assert!(ab > 0.0);
            }
        }

        #[test]
        fn best_match_is_minimal(t in small_vec(24), l in 1usize..6, s_seed in any::<u64>()) {
            prop_assume!(l <= t.len());
            let mut rng = ChaCha8Rng::seed_from_u64(s_seed);
            let s: Vec<f64> = (0..l).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let got = subsequence_distance(&sh(&s), &t).unwrap();
            for start in 0..=t.len() - l {
                let d = euclidean_distance(&s, &t[start..start + l]).unwrap();
                prop_assert!(got.distance <= d);
            }
            prop_assert_eq!(got.distance, euclidean_distance(&s, &t[got.start..got.start + l]).unwrap());
            let (bs, bd) = brute_best(&s, &t);
            prop_assert_eq!(got.start, bs);
            prop_assert!((got.distance - bd).abs() <= 1e-12 * bd.max(1.0));
        }

        #[test]
        fn appending_never_increases_distance(t in small_vec(20), extra in small_vec(6), l in 1usize..5) {
            prop_assume!(l <= t.len());
            let s = sh(&t[..l].iter().map(|v| v + 0.5).collect::<Vec<_>>());
            let before = subsequence_distance(&s, &t).unwrap().distance;
            let mut longer = t.clone();
            longer.extend(extra);
            prop_assert!(subsequence_distance(&s, &longer).unwrap().distance <= before);
        }

        #[test]
        fn matches_within_contains_best(t in small_vec(20), l in 1usize..5) {
            prop_assume!(l <= t.len());
            let s = sh(&vec![0.25; l]);
            let best = subsequence_distance(&s, &t).unwrap();
            let within = matches_within(&s, &t, best.distance).unwrap();
            prop_assert!(within.iter().any(|m| m.start == best.start));
            prop_assert_eq!(any_within(&s, &t, best.distance).unwrap(), true);
            prop_assert!(matches_within(&s, &t, best.distance * 0.999 - 1e-12).unwrap().is_empty());
        }
    }
}
