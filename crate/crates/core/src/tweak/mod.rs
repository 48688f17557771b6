//! Tweaking a series so that a shapelet forest changes its prediction to a
//! desired label at low Euclidean cost.
//!
//! The building block is [`transform_subsequence`], which moves one window
//! onto the sphere of radius `threshold ± epsilon` around a condition's
//! shapelet. [`tweak_reversible`] / [`tweak_reversible_pruned`] and
//! [`tweak_irreversible`] apply it condition by condition along every
//! decision path ending in the desired label and keep the cheapest candidate
//! that actually flips the forest. [`tweak_nn`] is the nearest-neighbour
//! baseline and [`brute_force_min_changes`] an exact oracle for tiny binary
//! instances.

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::forest::PathCondition;
use crate::series::TimeSeries;

mod greedy;
mod nn;
mod oracle;

pub use greedy::{
    tweak_irreversible, tweak_irreversible_traced, tweak_reversible, tweak_reversible_pruned,
    CandidateOutcome, CandidateTrace,
};
pub use nn::tweak_nn;
pub use oracle::{brute_force_min_changes, hitting_set_instance, ORACLE_MAX_LEN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CostFunction {
    #[default]
    Euclidean,
}

impl CostFunction {
    pub fn cost(self, original: &[f64], transformed: &[f64]) -> Result<f64> {
        match self {
            CostFunction::Euclidean => crate::series::euclidean_distance(original, transformed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TweakConfig {
    /// Transformation strength; how far past the threshold an edited window lands.
    pub epsilon: f64,
    /// Cap on edits made by one "increase distance" loop. `None` means
    /// `100 * series length`.
    pub max_increase_iterations: Option<usize>,
    pub cost: CostFunction,
    /// Irreversible tweaking only: stop a candidate as soon as its partial
    /// cost reaches the best successful cost so far.
    pub early_abandoning: bool,
}

impl Default for TweakConfig {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            max_increase_iterations: None,
            cost: CostFunction::Euclidean,
            early_abandoning: true,
        }
    }
}

impl TweakConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(contract(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_increase_iterations == Some(0) {
            return Err(contract("max_increase_iterations must be positive"));
        }
        Ok(())
    }

    fn increase_cap(&self, m: usize) -> usize {
        self.max_increase_iterations.unwrap_or(100 * m)
    }
}

/// One window edit, identified by the path condition that asked for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edit {
    pub tree_index: usize,
    pub path_index: usize,
    pub condition_index: usize,
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TweakStats {
    /// Decision paths ending in the desired label.
    pub candidates: usize,
    /// Forest predictions actually run.
    pub predictions: usize,
    /// `(candidates - predictions) / candidates`, 0 without candidates.
    pub pruned_fraction: f64,
    /// Candidates dropped by early abandoning.
    pub abandoned: usize,
    pub abandoned_fraction: f64,
    /// Candidates that could not be completed (no unlocked window, or the
    /// increase loop hit its cap).
    pub aborted: usize,
    pub degenerate_transforms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TweakResult {
    pub transformed: TimeSeries,
    pub cost: f64,
    /// The forest predicts the desired label for `transformed`.
    pub success: bool,
    pub edits: Vec<Edit>,
    /// `(tree_index, path_index)` of the winning path.
    pub candidate: Option<(usize, usize)>,
    pub stats: TweakStats,
    pub diagnostic: Option<String>,
}

impl TweakResult {
    pub(crate) fn unchanged(series: &TimeSeries, stats: TweakStats, diagnostic: impl Into<String>) -> Self {
        Self {
            transformed: series.clone(),
            cost: 0.0,
            success: false,
            edits: Vec::new(),
            candidate: None,
            stats,
            diagnostic: Some(diagnostic.into()),
        }
    }
}

/// Result of moving one window onto a condition's threshold sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct Transformed {
    pub values: Vec<f64>,
    /// `threshold + epsilon * sign < 0`; the target radius was clamped to 0.
    pub degenerate: bool,
    /// The window coincided with the shapelet, so the move was made along
    /// the first coordinate axis.
    pub fallback_direction: bool,
}

/// Move `matched` to distance `threshold + epsilon * sign` from the
/// condition's shapelet, along the ray from the shapelet through `matched`.
///
/// This is the closest point to `matched` at the target radius. Placing it on
/// the opposite side of the shapelet would hit the same radius at a higher
/// cost.
pub fn transform_subsequence(matched: &[f64], condition: &PathCondition, epsilon: f64) -> Result<Transformed> {
    let center = condition.shapelet.values();
    if matched.len() != center.len() {
        return Err(contract(format!(
            "window of length {} against shapelet of length {}",
            matched.len(),
            center.len()
        )));
    }
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(contract(format!("epsilon must be non-negative, got {epsilon}")));
    }
    let mut radius = condition.threshold + epsilon * condition.direction.sign();
    let degenerate = radius < 0.0;
    if degenerate {
        radius = 0.0;
    }
    let mut direction: Vec<f64> = matched.iter().zip(center).map(|(s, c)| s - c).collect();
    let mut norm = direction.iter().map(|d| d * d).sum::<f64>().sqrt();
    let fallback_direction = norm == 0.0;
    if fallback_direction {
        direction.iter_mut().for_each(|d| *d = 0.0);
        direction[0] = 1.0;
        norm = 1.0;
    }
    let scale = radius / norm;
    let values = center.iter().zip(&direction).map(|(c, d)| c + d * scale).collect();
    Ok(Transformed {
        values,
        degenerate,
        fallback_direction,
    })
}

/// Half-open index intervals already edited by irreversible tweaking.
/// Stored sorted and merged (overlapping or adjacent intervals coalesce).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LockedRegions {
    intervals: Vec<(usize, usize)>,
}

impl LockedRegions {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intervals(&self) -> &[(usize, usize)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn insert(&mut self, start: usize, len: usize) {
        if len == 0 {
            return;
        }
        let (mut lo, mut hi) = (start, start + len);
        // first interval that could touch [lo, hi)
        let first = self.intervals.partition_point(|&(_, e)| e < lo);
        let mut last = first;
        while last < self.intervals.len() && self.intervals[last].0 <= hi {
            lo = lo.min(self.intervals[last].0);
            hi = hi.max(self.intervals[last].1);
            last += 1;
        }
        self.intervals.splice(first..last, [(lo, hi)]);
    }

    /// Does `[start, start + len)` share an index with a locked interval?
    pub fn overlaps(&self, start: usize, len: usize) -> bool {
        let end = start + len;
        let i = self.intervals.partition_point(|&(_, e)| e <= start);
        i < self.intervals.len() && self.intervals[i].0 < end
    }

    pub fn contains(&self, index: usize) -> bool {
        self.overlaps(index, 1)
    }
}
