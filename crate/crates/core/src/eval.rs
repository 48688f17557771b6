//! Evaluation protocol: split, train, tweak every test instance in both
//! directions, and aggregate cost, compactness, accuracy, runtime and
//! pruning into per-(dataset, method) rows.

use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::forest::{label_order, train, Hyperparameters, ShapeletForest};
use crate::series::{euclidean_distance, squared_distance, LabeledSeries, TimeSeries};
use crate::tweak::{
    tweak_irreversible, tweak_nn, tweak_reversible, tweak_reversible_pruned, Edit, TweakConfig, TweakResult,
};

/// Anything that maps a series to a label.
pub trait Classifier {
    fn classify(&self, series: &TimeSeries) -> Result<String>;
}

impl Classifier for ShapeletForest {
    fn classify(&self, series: &TimeSeries) -> Result<String> {
        self.predict(series).map(str::to_string)
    }
}

/// 1-NN under Euclidean distance. Ties go to the earliest training series.
#[derive(Debug, Clone)]
pub struct NearestNeighbor<'a> {
    pub training: &'a [LabeledSeries],
}

impl Classifier for NearestNeighbor<'_> {
    fn classify(&self, series: &TimeSeries) -> Result<String> {
        let mut best: Option<(f64, &str)> = None;
        for t in self.training {
            if t.series.len() != series.len() {
                return Err(contract(format!(
                    "1-NN needs equal lengths, got {} and {}",
                    t.series.len(),
                    series.len()
                )));
            }
            let d = squared_distance(t.series.values(), series.values());
            if best.is_none_or(|(b, _)| d < b) {
                best = Some((d, &t.label));
            }
        }
        best.map(|(_, l)| l.to_string())
            .ok_or_else(|| contract("1-NN has no training series"))
    }
}

pub fn accuracy(classifier: &impl Classifier, test: &[LabeledSeries]) -> Result<f64> {
    if test.is_empty() {
        return Err(contract("accuracy of an empty test set"));
    }
    let mut correct = 0usize;
    for s in test {
        if classifier.classify(&s.series)? == s.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / test.len() as f64)
}

/// Mean Euclidean cost over the successful results, recomputed from the
/// series themselves. `None` when nothing succeeded.
pub fn mean_cost(originals: &[TimeSeries], results: &[TweakResult]) -> Result<Option<f64>> {
    if results.is_empty() {
        return Err(contract("mean cost of no results"));
    }
    if originals.len() != results.len() {
        return Err(contract(format!(
            "{} originals for {} results",
            originals.len(),
            results.len()
        )));
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for (o, r) in originals.iter().zip(results) {
        if r.success {
            sum += euclidean_distance(o.values(), r.transformed.values())?;
            n += 1;
        }
    }
    Ok((n > 0).then(|| sum / n as f64))
}

/// Fraction of positions where the two series differ by more than `e`.
pub fn compactness(original: &TimeSeries, transformed: &TimeSeries, e: f64) -> Result<f64> {
    if original.len() != transformed.len() {
        return Err(contract(format!(
            "compactness of series with lengths {} and {}",
            original.len(),
            transformed.len()
        )));
    }
    if e.is_nan() || e < 0.0 {
        return Err(contract(format!("compactness threshold must be non-negative, got {e}")));
    }
    let changed = original
        .values()
        .iter()
        .zip(transformed.values())
        .filter(|(a, b)| (*a - *b).abs() > e)
        .count();
    Ok(changed as f64 / original.len() as f64)
}

/// Split indices into (train, test), stratified by label. Each class sends
/// `round(n_class * test_fraction)` members to the test side. Indices are
/// returned in dataset order.
pub fn stratified_split(data: &[LabeledSeries], test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(contract(format!("test fraction must be in (0, 1), got {test_fraction}")));
    }
    let mut labels: Vec<&str> = data.iter().map(|s| s.label.as_str()).collect();
    labels.sort_by(|a, b| label_order(a, b));
    labels.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for label in labels {
        let mut members: Vec<usize> = (0..data.len()).filter(|&i| data[i].label == label).collect();
        members.shuffle(&mut rng);
        let n_test = (members.len() as f64 * test_fraction).round() as usize;
        if n_test >= members.len() {
            return Err(Error::Experiment(format!(
                "class '{label}' has {} series and would be absent from the training split; \
                 lower the test fraction or add data",
                members.len()
            )));
        }
        test_idx.extend_from_slice(&members[..n_test]);
        train_idx.extend_from_slice(&members[n_test..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((train_idx, test_idx))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Reversible tweaking with prediction ordering.
    Rt,
    /// Reversible tweaking, candidates predicted in path order.
    RtUnpruned,
    /// Irreversible tweaking (early abandoning as configured).
    Irt,
    /// Nearest training neighbour of the desired label.
    Nn,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Rt, Method::RtUnpruned, Method::Irt, Method::Nn];

    pub fn name(self) -> &'static str {
        match self {
            Method::Rt => "rt",
            Method::RtUnpruned => "rt-unpruned",
            Method::Irt => "irt",
            Method::Nn => "nn",
        }
    }

    pub fn run(
        self,
        forest: &ShapeletForest,
        series: &TimeSeries,
        desired: &str,
        config: &TweakConfig,
        training: &[LabeledSeries],
    ) -> Result<TweakResult> {
        match self {
            Method::Rt => tweak_reversible_pruned(forest, series, desired, config),
            Method::RtUnpruned => tweak_reversible(forest, series, desired, config),
            Method::Irt => tweak_irreversible(forest, series, desired, config),
            Method::Nn => tweak_nn(forest, series, desired, training),
        }
    }

    /// Share of candidate predictions skipped: prediction ordering for `rt`,
    /// early abandoning for `irt`. Not meaningful for the other methods.
    fn pruning(self, result: &TweakResult) -> Option<f64> {
        match self {
            Method::Rt => Some(result.stats.pruned_fraction),
            Method::Irt => Some(result.stats.abandoned_fraction),
            Method::RtUnpruned | Method::Nn => None,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method '{s}' (rt, rt-unpruned, irt, nn)"))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub test_fraction: f64,
    pub compactness_e: f64,
    /// Seeds the train/test split. The forest uses `forest.seed`.
    pub seed: u64,
    pub methods: Vec<Method>,
    pub forest: Hyperparameters,
    pub tweak: TweakConfig,
    /// `(source, target)` label pairs. `None` means both directions of a
    /// two-class dataset.
    pub label_pairs: Option<Vec<(String, String)>>,
    /// Measure wall time per transformation. Off gives reports that are
    /// byte-identical between runs.
    pub record_timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            compactness_e: 1e-9,
            seed: 0,
            methods: vec![Method::Rt, Method::RtUnpruned, Method::Irt, Method::Nn],
            forest: Hyperparameters::default(),
            tweak: TweakConfig::default(),
            label_pairs: None,
            record_timing: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(contract(format!("test fraction must be in (0, 1), got {}", self.test_fraction)));
        }
        if self.compactness_e.is_nan() || self.compactness_e < 0.0 {
            return Err(contract(format!("compactness threshold must be non-negative, got {}", self.compactness_e)));
        }
        if self.methods.is_empty() {
            return Err(contract("no methods selected"));
        }
        self.tweak.validate()
    }
}

/// One tweak of one test instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub dataset: String,
    /// Index of the series in the dataset given to the experiment.
    pub instance: usize,
    pub source: String,
    pub target: String,
    pub method: Method,
    pub cost: f64,
    pub compactness: f64,
    pub success: bool,
    pub seconds: f64,
    pub pruned_fraction: Option<f64>,
    pub edits: Vec<Edit>,
}

/// Aggregates for one (dataset, method). Means are taken per direction and
/// then averaged with equal weight over the directions that have data.
/// Cost and compactness only count successful tweaks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub dataset: String,
    pub method: Method,
    pub series_len: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Tweaks attempted, summed over directions.
    pub n_transformed: usize,
    pub n_success: usize,
    pub success_rate: Option<f64>,
    pub mean_cost: Option<f64>,
    pub mean_compactness: Option<f64>,
    pub forest_accuracy: f64,
    pub nn_accuracy: f64,
    pub seconds_per_transformation: Option<f64>,
    pub pruned_fraction: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rows: Vec<MetricsRow>,
    pub records: Vec<InstanceRecord>,
}

/// Column order of [`MetricsReport::to_tsv`].
pub const TSV_HEADER: [&str; 14] = [
    "dataset",
    "method",
    "series_len",
    "n_train",
    "n_test",
    "n_transformed",
    "n_success",
    "success_rate",
    "mean_cost",
    "mean_compactness",
    "forest_accuracy",
    "nn_accuracy",
    "seconds_per_transformation",
    "pruned_fraction",
];

/// Split `dataset`, then [`run_on_split`].
pub fn run_experiment(name: &str, dataset: &[LabeledSeries], config: &ExperimentConfig) -> Result<MetricsReport> {
    config.validate()?;
    let (train_idx, test_idx) = stratified_split(dataset, config.test_fraction, config.seed)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| dataset[i].clone()).collect::<Vec<_>>();
    run_on_split(name, &pick(&train_idx), &pick(&test_idx), &test_idx, config)
}

/// Train on `train_set`, then tweak every test instance predicted as a
/// pair's source label toward its target with each configured method.
/// `test_ids` names the test instances in the records.
pub fn run_on_split(
    name: &str,
    train_set: &[LabeledSeries],
    test_set: &[LabeledSeries],
    test_ids: &[usize],
    config: &ExperimentConfig,
) -> Result<MetricsReport> {
    config.validate()?;
    if test_ids.len() != test_set.len() {
        return Err(contract("one id per test series required"));
    }
    let forest = train(train_set, &config.forest)?;
    let pairs = match &config.label_pairs {
        Some(p) => p.clone(),
        None => match forest.labels() {
            [a, b] => vec![(a.clone(), b.clone()), (b.clone(), a.clone())],
            other => {
                return Err(Error::Experiment(format!(
                    "{} labels found; give explicit label pairs for anything but two classes",
                    other.len()
                )))
            }
        },
    };
    for (s, t) in &pairs {
        forest.class_of(s)?;
        forest.class_of(t)?;
        if s == t {
            return Err(contract(format!("label pair '{s}' -> '{t}' does not change anything")));
        }
    }

    let forest_accuracy = accuracy(&forest, test_set)?;
    let nn_accuracy = accuracy(&NearestNeighbor { training: train_set }, test_set)?;
    let predicted: Vec<String> = test_set
        .iter()
        .map(|s| forest.classify(&s.series))
        .collect::<Result<_>>()?;
    let (shortest, longest) = test_set
        .iter()
        .chain(train_set)
        .fold((usize::MAX, 0), |(lo, hi), s| (lo.min(s.series.len()), hi.max(s.series.len())));
    let series_len = if shortest == longest { longest } else { 0 };

    let mut report = MetricsReport::default();
    for &method in &config.methods {
        let mut directions = Vec::new();
        for (source, target) in &pairs {
            let chosen: Vec<usize> = (0..test_set.len()).filter(|&i| predicted[i] == *source).collect();
            let records = chosen
                .par_iter()
                .map(|&i| {
                    let original = &test_set[i].series;
                    let start = Instant::now();
                    let result = method.run(&forest, original, target, &config.tweak, train_set)?;
                    let elapsed = start.elapsed().as_secs_f64();
                    Ok(InstanceRecord {
                        dataset: name.to_string(),
                        instance: test_ids[i],
                        source: source.clone(),
                        target: target.clone(),
                        method,
                        cost: euclidean_distance(original.values(), result.transformed.values())?,
                        compactness: compactness(original, &result.transformed, config.compactness_e)?,
                        success: result.success,
                        seconds: if config.record_timing { elapsed } else { 0.0 },
                        pruned_fraction: method.pruning(&result),
                        edits: result.edits,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            directions.push(summarize(&records));
            report.records.extend(records);
        }
        let macro_avg = |f: fn(&DirectionSummary) -> Option<f64>| {
            let vals: Vec<f64> = directions.iter().filter_map(f).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        };
        report.rows.push(MetricsRow {
            dataset: name.to_string(),
            method,
            series_len,
            n_train: train_set.len(),
            n_test: test_set.len(),
            n_transformed: directions.iter().map(|d| d.attempted).sum(),
            n_success: directions.iter().map(|d| d.succeeded).sum(),
            success_rate: macro_avg(|d| d.success_rate),
            mean_cost: macro_avg(|d| d.cost),
            mean_compactness: macro_avg(|d| d.compactness),
            forest_accuracy,
            nn_accuracy,
            seconds_per_transformation: if config.record_timing { macro_avg(|d| d.seconds) } else { None },
            pruned_fraction: macro_avg(|d| d.pruned),
        });
    }
    Ok(report)
}

struct DirectionSummary {
    attempted: usize,
    succeeded: usize,
    success_rate: Option<f64>,
    cost: Option<f64>,
    compactness: Option<f64>,
    seconds: Option<f64>,
    pruned: Option<f64>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn summarize(records: &[InstanceRecord]) -> DirectionSummary {
    let ok = || records.iter().filter(|r| r.success);
    DirectionSummary {
        attempted: records.len(),
        succeeded: ok().count(),
        success_rate: mean(records.iter().map(|r| if r.success { 1.0 } else { 0.0 })),
        cost: mean(ok().map(|r| r.cost)),
        compactness: mean(ok().map(|r| r.compactness)),
        seconds: mean(records.iter().map(|r| r.seconds)),
        pruned: mean(records.iter().filter_map(|r| r.pruned_fraction)),
    }
}

fn fixed(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}

fn exact(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| format!("{v:?}"))
}

fn render(header: &[String], body: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in body {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: &[String]| {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            if i == 0 {
                let _ = write!(s, "{c:<w$}");
            } else {
                let _ = write!(s, "  {c:>w$}");
            }
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(header);
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for row in body {
        out.push_str(&line(row));
    }
    out
}

impl MetricsReport {
    pub fn extend(&mut self, other: MetricsReport) {
        self.rows.extend(other.rows);
        self.records.extend(other.records);
    }

    pub fn datasets(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.dataset.as_str()) {
                out.push(&r.dataset);
            }
        }
        out
    }

    pub fn methods(&self) -> Vec<Method> {
        let mut out = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.method) {
                out.push(r.method);
            }
        }
        out
    }

    pub fn row(&self, dataset: &str, method: Method) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.dataset == dataset && r.method == method)
    }

    /// Average of a column over the datasets that have a value for it.
    fn column_avg(&self, method: Method, f: impl Fn(&MetricsRow) -> Option<f64>) -> Option<f64> {
        mean(self.rows.iter().filter(|r| r.method == method).filter_map(f))
    }

    /// Cost, compactness, success rate per method, then forest and 1-NN
    /// accuracy; one line per dataset and a closing `Avg.` line.
    pub fn cost_table(&self) -> String {
        let methods = self.methods();
        let mut header = vec!["Dataset".to_string()];
        for group in ["cost", "compact", "success"] {
            header.extend(methods.iter().map(|m| format!("{group}:{m}")));
        }
        header.push("acc:forest".into());
        header.push("acc:1nn".into());

        let first = |d: &str| self.rows.iter().find(|r| r.dataset == d);
        let mut body = Vec::new();
        for d in self.datasets() {
            let mut row = vec![d.to_string()];
            for f in [
                |r: &MetricsRow| r.mean_cost,
                |r: &MetricsRow| r.mean_compactness,
                |r: &MetricsRow| r.success_rate,
            ] {
                row.extend(methods.iter().map(|&m| fixed(self.row(d, m).and_then(f))));
            }
            let r = first(d).unwrap();
            row.push(fixed(Some(r.forest_accuracy)));
            row.push(fixed(Some(r.nn_accuracy)));
            body.push(row);
        }
        let mut avg = vec!["Avg.".to_string()];
        for f in [
            |r: &MetricsRow| r.mean_cost,
            |r: &MetricsRow| r.mean_compactness,
            |r: &MetricsRow| r.success_rate,
        ] {
            avg.extend(methods.iter().map(|&m| fixed(self.column_avg(m, f))));
        }
        let accs = |f: fn(&MetricsRow) -> f64| mean(self.datasets().into_iter().map(|d| f(first(d).unwrap())));
        avg.push(fixed(accs(|r| r.forest_accuracy)));
        avg.push(fixed(accs(|r| r.nn_accuracy)));
        body.push(avg);
        render(&header, &body)
    }

    /// Series length, seconds per transformation for every method, and the
    /// pruned fraction for `rt` and `irt`.
    pub fn runtime_table(&self) -> String {
        let methods = self.methods();
        let pruned: Vec<Method> = methods
            .iter()
            .copied()
            .filter(|m| matches!(m, Method::Rt | Method::Irt))
            .collect();
        let mut header = vec!["Dataset".to_string(), "|T|".to_string()];
        header.extend(methods.iter().map(|m| format!("sec:{m}")));
        header.extend(pruned.iter().map(|m| format!("pruned:{m}")));
        let mut body = Vec::new();
        for d in self.datasets() {
            let len = self.rows.iter().find(|r| r.dataset == d).unwrap().series_len;
            let mut row = vec![d.to_string(), len.to_string()];
            row.extend(
                methods
                    .iter()
                    .map(|&m| fixed(self.row(d, m).and_then(|r| r.seconds_per_transformation))),
            );
            row.extend(pruned.iter().map(|&m| fixed(self.row(d, m).and_then(|r| r.pruned_fraction))));
            body.push(row);
        }
        let mut avg = vec!["Avg.".to_string(), String::new()];
        avg.extend(methods.iter().map(|&m| fixed(self.column_avg(m, |r| r.seconds_per_transformation))));
        avg.extend(pruned.iter().map(|&m| fixed(self.column_avg(m, |r| r.pruned_fraction))));
        body.push(avg);
        render(&header, &body)
    }

    /// Both tables, separated by a blank line.
    pub fn to_text(&self) -> String {
        format!("{}\n{}", self.cost_table(), self.runtime_table())
    }

    /// Tab-separated, one row per (dataset, method), columns as in
    /// [`TSV_HEADER`]. Missing values are written as `NA`.
    pub fn to_tsv(&self) -> String {
        let mut out = TSV_HEADER.join("\t");
        out.push('\n');
        for r in &self.rows {
            let cells = [
                r.dataset.clone(),
                r.method.to_string(),
                r.series_len.to_string(),
                r.n_train.to_string(),
                r.n_test.to_string(),
                r.n_transformed.to_string(),
                r.n_success.to_string(),
                exact(r.success_rate),
                exact(r.mean_cost),
                exact(r.mean_compactness),
                exact(Some(r.forest_accuracy)),
                exact(Some(r.nn_accuracy)),
                exact(r.seconds_per_transformation),
                exact(r.pruned_fraction),
            ];
            out.push_str(&cells.join("\t"));
            out.push('\n');
        }
        out
    }

    /// One JSON object per line, one line per [`InstanceRecord`].
    pub fn records_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }
}
