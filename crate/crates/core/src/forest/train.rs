//! Random shapelet tree growing.
//!
//! Each tree gets its own ChaCha stream keyed by `(seed, tree_index)`, so the
//! forest is identical whether trees are grown serially or in parallel.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{label_order, Hyperparameters, Node, ShapeletForest, ShapeletTree};
use crate::error::{Error, Result};
use crate::series::{subsequence_distance, LabeledSeries, Shapelet};

/// Train a random shapelet forest.
pub fn train(dataset: &[LabeledSeries], hp: &Hyperparameters) -> Result<ShapeletForest> {
    if dataset.is_empty() {
        return Err(Error::Training("empty dataset".into()));
    }
    if hp.n_trees == 0 || hp.shapelets_per_node == 0 {
        return Err(Error::Training(
            "n_trees and shapelets_per_node must be positive".into(),
        ));
    }
    let mut labels: Vec<String> = dataset.iter().map(|s| s.label.clone()).collect();
    labels.sort_by(|a, b| label_order(a, b));
    labels.dedup();
    if labels.len() < 2 {
        return Err(Error::Training(format!(
            "need at least two classes, found {}",
            labels.len()
        )));
    }

    let shortest = dataset.iter().map(|s| s.series.len()).min().unwrap();
    let max_len = hp.max_len.unwrap_or(shortest).min(shortest);
    let min_len = hp.min_len.max(1).min(max_len);
    if max_len == 0 || hp.max_len == Some(0) {
        return Err(Error::Training("maximum shapelet length must be positive".into()));
    }

    let classes: Vec<usize> = dataset
        .iter()
        .map(|s| labels.iter().position(|l| *l == s.label).unwrap())
        .collect();
    let series: Vec<&[f64]> = dataset.iter().map(|s| s.series.values()).collect();
    let grower = Grower {
        series: &series,
        classes: &classes,
        n_classes: labels.len(),
        candidates: hp.shapelets_per_node,
        min_len,
        max_len,
    };

    let trees = (0..hp.n_trees)
        .into_par_iter()
        .map(|tree_index| {
            let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
            rng.set_stream(tree_index as u64);
            let n = series.len();
            let sample: Vec<usize> = if hp.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grower.grow(sample, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;

    ShapeletForest::from_trees(trees, labels, hp.clone())
}

struct Grower<'a> {
    series: &'a [&'a [f64]],
    classes: &'a [usize],
    n_classes: usize,
    candidates: usize,
    min_len: usize,
    max_len: usize,
}

struct Split {
    shapelet: Shapelet,
    threshold: f64,
    gain: f64,
    distances: Vec<f64>,
}

impl Grower<'_> {
    fn grow(&self, sample: Vec<usize>, rng: &mut ChaCha8Rng) -> Result<ShapeletTree> {
        let mut nodes = Vec::new();
        self.grow_node(sample, rng, &mut nodes)?;
        ShapeletTree::from_nodes(nodes, self.n_classes)
    }

    fn grow_node(&self, sample: Vec<usize>, rng: &mut ChaCha8Rng, nodes: &mut Vec<Node>) -> Result<usize> {
        let id = nodes.len();
        let counts = self.counts(&sample);
        let majority = super::majority_of_counts(&counts);
        nodes.push(Node::Leaf { class: majority });
        if sample.len() < 2 || counts.iter().filter(|&&c| c > 0).count() < 2 {
            return Ok(id);
        }
        let Some(split) = self.best_split(&sample, &counts, rng)? else {
            return Ok(id);
        };
        let mut le = Vec::new();
        let mut gt = Vec::new();
        for (&i, &d) in sample.iter().zip(&split.distances) {
            if d <= split.threshold {
                le.push(i);
            } else {
                gt.push(i);
            }
        }
        let le_id = self.grow_node(le, rng, nodes)?;
        let gt_id = self.grow_node(gt, rng, nodes)?;
        nodes[id] = Node::Split {
            shapelet: split.shapelet,
            threshold: split.threshold,
            le: le_id,
            gt: gt_id,
        };
        Ok(id)
    }

    fn counts(&self, sample: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &i in sample {
            counts[self.classes[i]] += 1;
        }
        counts
    }

    fn best_split(&self, sample: &[usize], counts: &[usize], rng: &mut ChaCha8Rng) -> Result<Option<Split>> {
        let parent_entropy = entropy(counts);
        let mut best: Option<Split> = None;
        for _ in 0..self.candidates {
            let source = self.series[sample[rng.gen_range(0..sample.len())]];
            let len = rng.gen_range(self.min_len..=self.max_len);
            let start = rng.gen_range(0..=source.len() - len);
            let shapelet = Shapelet::new(source[start..start + len].to_vec())?;

            let distances = sample
                .iter()
                .map(|&i| subsequence_distance(&shapelet, self.series[i]).map(|m| m.distance))
                .collect::<Result<Vec<f64>>>()?;
            if let Some((threshold, gain)) = self.best_threshold(sample, &distances, counts, parent_entropy) {
                if best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(Split {
                        shapelet,
                        threshold,
                        gain,
                        distances,
                    });
                }
            }
        }
        Ok(best.filter(|b| b.gain > 0.0))
    }

    /// Information-gain maximizing midpoint threshold over sorted distances.
    fn best_threshold(
        &self,
        sample: &[usize],
        distances: &[f64],
        counts: &[usize],
        parent_entropy: f64,
    ) -> Option<(f64, f64)> {
        let mut order: Vec<usize> = (0..sample.len()).collect();
        order.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]));
        let n = sample.len() as f64;
        let mut left = vec![0usize; self.n_classes];
        let mut right = counts.to_vec();
        let mut best: Option<(f64, f64)> = None;
        for k in 0..order.len() - 1 {
            let class = self.classes[sample[order[k]]];
            left[class] += 1;
            right[class] -= 1;
            let (lo, hi) = (distances[order[k]], distances[order[k + 1]]);
            if lo == hi {
                continue;
            }
            let nl = (k + 1) as f64;
            let gain = parent_entropy - nl / n * entropy(&left) - (n - nl) / n * entropy(&right);
            if best.is_none_or(|(_, g)| gain > g) {
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some((threshold, gain));
            }
        }
        best
    }
}

fn entropy(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}
