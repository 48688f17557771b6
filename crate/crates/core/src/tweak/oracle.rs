//! Exact minimum-change search for tiny binary series.
//!
//! Deciding whether at most `k` changes suffice to flip a forest is hard in
//! general (hitting set reduces to it), so this is only a desk-scale oracle
//! for checking the greedy tweakers on toy instances.

use crate::error::{contract, Result};
use crate::forest::{Hyperparameters, Node, ShapeletForest, ShapeletTree};
use crate::series::{Shapelet, TimeSeries};

/// Longest series [`brute_force_min_changes`] accepts.
pub const ORACLE_MAX_LEN: usize = 20;

/// Smallest set of positions whose bits, when flipped, make `forest` predict
/// `desired`, searching sizes `0..=k`. Among sets of minimal size the
/// lexicographically first is returned. `Ok(None)` when no set of size at
/// most `k` works.
pub fn brute_force_min_changes(
    forest: &ShapeletForest,
    series: &TimeSeries,
    desired: &str,
    k: usize,
) -> Result<Option<Vec<usize>>> {
    let n = series.len();
    if n > ORACLE_MAX_LEN {
        return Err(contract(format!(
            "series of length {n} exceeds the exhaustive-search cap of {ORACLE_MAX_LEN}"
        )));
    }
    if let Some(i) = series.values().iter().position(|&v| v != 0.0 && v != 1.0) {
        return Err(contract(format!("value at index {i} is not binary")));
    }
    let target = forest.class_of(desired)?;
    let base = series.values().to_vec();
    let mut work = base.clone();
    for size in 0..=k.min(n) {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            work.copy_from_slice(&base);
            for &i in &combo {
                work[i] = 1.0 - work[i];
            }
            if forest.predict_class(&work)? == target {
                return Ok(Some(combo));
            }
            if !next_combination(&mut combo, n) {
                break;
            }
        }
    }
    Ok(None)
}

/// Advance to the next `combo.len()`-subset of `0..n` in lexicographic order.
fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let Some(i) = (0..k).rev().find(|&i| combo[i] < n - k + i) else {
        return false;
    };
    combo[i] += 1;
    for j in i + 1..k {
        combo[j] = combo[j - 1] + 1;
    }
    true
}

/// Encode a hitting-set instance as a forest over binary series of length
/// `n`. Elements are 1-based. Set `j` becomes a chain tree that answers
/// `"1"` as soon as one of its elements' positions holds a 1 and `"0"` when
/// none does. The returned series is all zeros, which every tree labels `"0"`.
///
/// Each node probes one position through a length-1 shapelet `[0]` anchored
/// there with threshold 0.5, so with `epsilon = 0.5` the greedy tweakers
/// write exact 0/1 values.
pub fn hitting_set_instance(n: usize, sets: &[Vec<usize>]) -> Result<(ShapeletForest, TimeSeries)> {
    if n == 0 || sets.is_empty() {
        return Err(contract("hitting-set instance needs elements and sets"));
    }
    let mut trees = Vec::with_capacity(sets.len());
    for set in sets {
        if set.is_empty() || set.iter().any(|&e| e == 0 || e > n) {
            return Err(contract(format!("set {set:?} is empty or outside 1..={n}")));
        }
        let mut nodes = Vec::new();
        for (k, &e) in set.iter().enumerate() {
            let split = nodes.len();
            nodes.push(Node::Leaf { class: 0 });
            nodes.push(Node::Leaf { class: 1 });
            if k + 1 == set.len() {
                nodes.push(Node::Leaf { class: 0 });
            }
            // the `le` child is the next probe, or the final "0" leaf
            nodes[split] = Node::Split {
                shapelet: Shapelet::anchored(vec![0.0], e - 1)?,
                threshold: 0.5,
                le: split + 2,
                gt: split + 1,
            };
        }
        trees.push(ShapeletTree::from_nodes(nodes, 2)?);
    }
    let forest = ShapeletForest::from_trees(
        trees,
        vec!["0".into(), "1".into()],
        Hyperparameters {
            n_trees: sets.len(),
            ..Default::default()
        },
    )?;
    Ok((forest, TimeSeries::new(vec![0.0; n])?))
}
