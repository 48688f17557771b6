//! Reversible and irreversible greedy tweaking.
//!
//! Every decision path ending in the desired label yields one candidate: a
//! fresh copy of the series edited so that, condition by condition, it takes
//! the path's branch. Unsatisfied `<=` conditions move the single best window
//! inside the threshold; unsatisfied `>` conditions push windows out one at a
//! time, always the current best match, until none is within the threshold.
//! Success is always decided by re-running the forest on the candidate.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{transform_subsequence, Edit, LockedRegions, TweakConfig, TweakResult, TweakStats};
use crate::error::{Error, Result};
use crate::forest::{DecisionPath, Direction, ShapeletForest};
use crate::series::{best_match_where, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Reversible,
    Irreversible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CandidateOutcome {
    Completed,
    /// A `<=` condition found no unlocked window to move.
    NoUnlockedWindow,
    /// An increase loop hit `max_increase_iterations`.
    IterationCap,
    /// Partial cost reached the best successful cost.
    Abandoned,
}

/// Cost after every edit of one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateTrace {
    pub tree_index: usize,
    pub path_index: usize,
    pub costs: Vec<f64>,
    pub outcome: CandidateOutcome,
}

struct Candidate {
    tree_index: usize,
    path_index: usize,
    values: Vec<f64>,
    cost: f64,
    edits: Vec<Edit>,
    outcome: CandidateOutcome,
    degenerate: usize,
}

/// Preconditions shared by the greedy tweakers. Returns the decision paths
/// ending in `desired`.
fn prepare(
    forest: &ShapeletForest,
    series: &TimeSeries,
    desired: &str,
    config: &TweakConfig,
) -> Result<Vec<DecisionPath>> {
    config.validate()?;
    forest.class_of(desired)?;
    let predicted = forest.predict(series)?;
    if predicted == desired {
        return Err(Error::AlreadyDesired(desired.to_string()));
    }
    forest.extract_paths(desired)
}

fn no_paths(series: &TimeSeries, desired: &str) -> TweakResult {
    TweakResult::unchanged(
        series,
        TweakStats::default(),
        format!("no decision path in the forest ends in '{desired}'"),
    )
}

/// Apply one path's conditions to a copy of `original`.
///
/// `abandon_at` is only honoured in irreversible mode, where cost never
/// decreases along a candidate.
fn run_path(
    original: &[f64],
    path: &DecisionPath,
    config: &TweakConfig,
    mode: Mode,
    abandon_at: f64,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<Candidate> {
    let mut values = original.to_vec();
    let mut locks = LockedRegions::new();
    let mut edits = Vec::new();
    let mut degenerate = 0;
    let mut cost = 0.0;
    let cap = config.increase_cap(original.len());

    let finish = |values: Vec<f64>, cost: f64, edits: Vec<Edit>, outcome, degenerate: usize| Candidate {
        tree_index: path.tree_index,
        path_index: path.path_index,
        values,
        cost,
        edits,
        outcome,
        degenerate,
    };

    for (k, condition) in path.conditions.iter().enumerate() {
        if condition.test(&values)? {
            continue;
        }
        let shapelet = &condition.shapelet;
        let len = shapelet.len();
        let mut iterations = 0;
        loop {
            let best = match mode {
                Mode::Reversible => best_match_where(shapelet, &values, |_| true)?,
                Mode::Irreversible => best_match_where(shapelet, &values, |s| !locks.overlaps(s, len))?,
            };
            let Some(best) = best else {
                match condition.direction {
                    Direction::Le => {
                        return Ok(finish(values, cost, edits, CandidateOutcome::NoUnlockedWindow, degenerate))
                    }
                    // every remaining match is locked; leave the rest to the vote
                    Direction::Gt => break,
                }
            };
            if condition.direction == Direction::Gt && best.distance > condition.threshold {
                break;
            }
            if condition.direction == Direction::Gt {
                if iterations == cap {
                    return Ok(finish(values, cost, edits, CandidateOutcome::IterationCap, degenerate));
                }
                iterations += 1;
            }

            let window = &mut values[best.start..best.start + len];
            let moved = transform_subsequence(window, condition, config.epsilon)?;
            window.copy_from_slice(&moved.values);
            degenerate += moved.degenerate as usize;
            edits.push(Edit {
                tree_index: path.tree_index,
                path_index: path.path_index,
                condition_index: k,
                start: best.start,
                len,
            });
            cost = config.cost.cost(original, &values)?;
            if let Some(t) = trace.as_deref_mut() {
                t.push(cost);
            }
            if mode == Mode::Irreversible {
                locks.insert(best.start, len);
                if cost >= abandon_at {
                    return Ok(finish(values, cost, edits, CandidateOutcome::Abandoned, degenerate));
                }
            }
            if condition.direction == Direction::Le {
                break;
            }
        }
    }
    Ok(finish(values, cost, edits, CandidateOutcome::Completed, degenerate))
}

fn assemble(series: &TimeSeries, winner: Option<Candidate>, mut stats: TweakStats) -> Result<TweakResult> {
    if stats.candidates > 0 {
        let c = stats.candidates as f64;
        stats.pruned_fraction = (stats.candidates - stats.predictions) as f64 / c;
        stats.abandoned_fraction = stats.abandoned as f64 / c;
    }
    Ok(match winner {
        Some(w) => TweakResult {
            transformed: TimeSeries::new(w.values)?,
            cost: w.cost,
            success: true,
            edits: w.edits,
            candidate: Some((w.tree_index, w.path_index)),
            stats,
            diagnostic: None,
        },
        None => TweakResult::unchanged(series, stats, "no candidate transformation changed the prediction"),
    })
}

/// Reversible tweaking, evaluating candidates in path order and keeping the
/// cheapest one the forest accepts. A candidate is only predicted when it
/// beats the best cost so far.
pub fn tweak_reversible(
    forest: &ShapeletForest,
    series: &TimeSeries,
    desired: &str,
    config: &TweakConfig,
) -> Result<TweakResult> {
    let paths = prepare(forest, series, desired, config)?;
    if paths.is_empty() {
        return Ok(no_paths(series, desired));
    }
    let target = forest.class_of(desired)?;
    let mut stats = TweakStats {
        candidates: paths.len(),
        ..Default::default()
    };
    let mut best: Option<Candidate> = None;
    for path in &paths {
        let cand = run_path(series.values(), path, config, Mode::Reversible, f64::INFINITY, None)?;
        stats.degenerate_transforms += cand.degenerate;
        if cand.outcome != CandidateOutcome::Completed {
            stats.aborted += 1;
            continue;
        }
        if best.as_ref().is_none_or(|b| cand.cost < b.cost) {
            stats.predictions += 1;
            if forest.predict_class(&cand.values)? == target {
                best = Some(cand);
            }
        }
    }
    assemble(series, best, stats)
}

/// Reversible tweaking with prediction ordering: build every candidate,
/// sort by cost and predict cheapest-first, stopping at the first success.
/// Same answer as [`tweak_reversible`]; equal costs go to the lower
/// `(tree_index, path_index)`.
pub fn tweak_reversible_pruned(
    forest: &ShapeletForest,
    series: &TimeSeries,
    desired: &str,
    config: &TweakConfig,
) -> Result<TweakResult> {
    let paths = prepare(forest, series, desired, config)?;
    if paths.is_empty() {
        return Ok(no_paths(series, desired));
    }
    let target = forest.class_of(desired)?;
    let mut stats = TweakStats {
        candidates: paths.len(),
        ..Default::default()
    };
    let mut candidates = Vec::with_capacity(paths.len());
    for path in &paths {
        let cand = run_path(series.values(), path, config, Mode::Reversible, f64::INFINITY, None)?;
        stats.degenerate_transforms += cand.degenerate;
        if cand.outcome == CandidateOutcome::Completed {
            candidates.push(cand);
        } else {
            stats.aborted += 1;
        }
    }
    // stable: ties keep path order
    candidates.sort_by(|a, b| a.cost.partial_cmp(&b.cost).unwrap_or(Ordering::Equal));
    let mut winner = None;
    for cand in candidates {
        stats.predictions += 1;
        if forest.predict_class(&cand.values)? == target {
            winner = Some(cand);
            break;
        }
    }
    assemble(series, winner, stats)
}

/// Irreversible tweaking: edited windows are locked and later best-match
/// searches skip any window touching a locked index, so each candidate's
/// cost only grows. With `config.early_abandoning` a candidate stops once its
/// partial cost reaches the best successful cost found so far.
pub fn tweak_irreversible(
    forest: &ShapeletForest,
    series: &TimeSeries,
    desired: &str,
    config: &TweakConfig,
) -> Result<TweakResult> {
    irreversible(forest, series, desired, config, None)
}

/// [`tweak_irreversible`] that also reports the cost after every edit of
/// every candidate.
pub fn tweak_irreversible_traced(
    forest: &ShapeletForest,
    series: &TimeSeries,
    desired: &str,
    config: &TweakConfig,
) -> Result<(TweakResult, Vec<CandidateTrace>)> {
    let mut traces = Vec::new();
    let result = irreversible(forest, series, desired, config, Some(&mut traces))?;
    Ok((result, traces))
}

fn irreversible(
    forest: &ShapeletForest,
    series: &TimeSeries,
    desired: &str,
    config: &TweakConfig,
    mut traces: Option<&mut Vec<CandidateTrace>>,
) -> Result<TweakResult> {
    let paths = prepare(forest, series, desired, config)?;
    if paths.is_empty() {
        return Ok(no_paths(series, desired));
    }
    let target = forest.class_of(desired)?;
    let mut stats = TweakStats {
        candidates: paths.len(),
        ..Default::default()
    };
    let mut best: Option<Candidate> = None;
    for path in &paths {
        let abandon_at = match (&best, config.early_abandoning) {
            (Some(b), true) => b.cost,
            _ => f64::INFINITY,
        };
        let mut costs = Vec::new();
        let cand = run_path(
            series.values(),
            path,
            config,
            Mode::Irreversible,
            abandon_at,
            traces.is_some().then_some(&mut costs),
        )?;
        if let Some(t) = traces.as_deref_mut() {
            t.push(CandidateTrace {
                tree_index: path.tree_index,
                path_index: path.path_index,
                costs,
                outcome: cand.outcome,
            });
        }
        stats.degenerate_transforms += cand.degenerate;
        match cand.outcome {
            CandidateOutcome::Completed => {}
            CandidateOutcome::Abandoned => {
                stats.abandoned += 1;
                continue;
            }
            CandidateOutcome::NoUnlockedWindow | CandidateOutcome::IterationCap => {
                stats.aborted += 1;
                continue;
            }
        }
        if best.as_ref().is_none_or(|b| cand.cost < b.cost) {
            stats.predictions += 1;
            if forest.predict_class(&cand.values)? == target {
                best = Some(cand);
            }
        }
    }
    let mut result = assemble(series, best, stats)?;
    if !result.success && result.stats.aborted == result.stats.candidates {
        result.diagnostic = Some("every candidate path aborted on locked regions".into());
    }
    Ok(result)
}
