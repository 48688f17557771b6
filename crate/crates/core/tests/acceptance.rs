//! Acceptance run. Prints one PASS/FAIL line per criterion.
//!
//! Property criteria abort the run when they fail. Trend criteria (5, 7, 9)
//! are measurements on randomized benchmarks; their line is printed either
//! way and they only fail the process when `TSTWEAK_STRICT_TRENDS=1`.
//! Criterion 9 looks for UCR files under `$UCR_ROOT` and is skipped without them.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tstweak::eval::{run_experiment, run_on_split, ExperimentConfig, Method, MetricsReport};
use tstweak::forest::{Node, ShapeletTree};
use tstweak::synthetic::PlantedShapes;
use tstweak::tweak::{
    brute_force_min_changes, hitting_set_instance, transform_subsequence, tweak_irreversible,
    tweak_irreversible_traced, tweak_nn, tweak_reversible, tweak_reversible_pruned, TweakConfig, TweakResult,
};
use tstweak::{
    euclidean_distance, persist, train, Direction, Hyperparameters, LabeledSeries, PathCondition, Shapelet,
    ShapeletForest, TimeSeries,
};

struct Outcome {
    pass: bool,
    detail: String,
}

/// `(forest, training split, test split)` on a small planted-shape problem.
fn small_problem(seed: u64) -> (ShapeletForest, Vec<LabeledSeries>, Vec<LabeledSeries>) {
    let gen = PlantedShapes {
        length: 40,
        width: 10,
        ..Default::default()
    };
    let train_set = gen.generate(40, seed);
    let test_set = gen.generate(30, seed + 10_000);
    let hp = Hyperparameters {
        n_trees: 15,
        shapelets_per_node: 15,
        seed,
        ..Default::default()
    };
    (train(&train_set, &hp).unwrap(), train_set, test_set)
}

/// `(series, desired label)` pairs the forest does not already predict as desired.
fn triples(forest: &ShapeletForest, test: &[LabeledSeries]) -> Vec<(TimeSeries, String)> {
    test.iter()
        .map(|s| {
            let current = forest.predict(&s.series).unwrap();
            let desired = forest.labels().iter().find(|l| *l != current).unwrap().clone();
            (s.series.clone(), desired)
        })
        .collect()
}

fn same_result(a: &TweakResult, b: &TweakResult) -> bool {
    a.cost.to_bits() == b.cost.to_bits()
        && a.success == b.success
        && a.transformed.values().len() == b.transformed.values().len()
        && a
            .transformed
            .values()
            .iter()
            .zip(b.transformed.values())
            .all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Route through every tree with a plain min-over-windows distance and
/// count votes; independent of the library's prediction code.
fn oracle_predict(forest: &ShapeletForest, series: &[f64]) -> usize {
    let mut counts = vec![0usize; forest.labels().len()];
    for tree in forest.trees() {
        counts[walk(tree, series)] += 1;
    }
    let best = *counts.iter().max().unwrap();
    counts.iter().position(|&c| c == best).unwrap()
}

fn walk(tree: &ShapeletTree, series: &[f64]) -> usize {
    let mut id = 0;
    loop {
        match &tree.nodes()[id] {
            Node::Leaf { class } => return *class,
            Node::Split {
                shapelet,
                threshold,
                le,
                gt,
            } => {
                let s = shapelet.values();
                let starts: Vec<usize> = match shapelet.anchor() {
                    Some(a) => vec![a],
                    None => (0..=series.len() - s.len()).collect(),
                };
                let d = starts
                    .iter()
                    .map(|&st| {
                        s.iter()
                            .zip(&series[st..st + s.len()])
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>()
                    })
                    .fold(f64::INFINITY, f64::min)
                    .sqrt();
                id = if d <= *threshold { *le } else { *gt };
            }
        }
    }
}

fn criterion_1() -> (Outcome, Vec<(ShapeletForest, TweakResult, String)>) {
    let mut checked = 0;
    let mut mismatches = 0;
    let mut successes = Vec::new();
    let abandon = TweakConfig::default();
    let exhaustive = TweakConfig {
        early_abandoning: false,
        ..Default::default()
    };
    for seed in 0..8 {
        let (forest, _, test) = small_problem(seed);
        for (series, desired) in triples(&forest, &test) {
            let plain = tweak_reversible(&forest, &series, &desired, &abandon).unwrap();
            let pruned = tweak_reversible_pruned(&forest, &series, &desired, &abandon).unwrap();
            let irt_fast = tweak_irreversible(&forest, &series, &desired, &abandon).unwrap();
            let irt_full = tweak_irreversible(&forest, &series, &desired, &exhaustive).unwrap();
            checked += 1;
            if !same_result(&plain, &pruned) || !same_result(&irt_fast, &irt_full) {
                mismatches += 1;
            }
            for r in [pruned, irt_fast] {
                if r.success {
                    successes.push((forest.clone(), r, desired.clone()));
                }
            }
        }
    }
    (
        Outcome {
            pass: checked >= 200 && mismatches == 0,
            detail: format!("{checked} triples, {mismatches} differ"),
        },
        successes,
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    for _ in 0..10_000 {
        let len = rng.gen_range(1..=32);
        let shapelet: Vec<f64> = (0..len).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let window: Vec<f64> = (0..len).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let threshold = rng.gen_range(0.0..10.0);
        let epsilon = rng.gen_range(0.01..3.0);
        let direction = if rng.gen_bool(0.5) { Direction::Le } else { Direction::Gt };
        let cond = PathCondition {
            shapelet: Shapelet::new(shapelet.clone()).unwrap(),
            threshold,
            direction,
        };
        let t = transform_subsequence(&window, &cond, epsilon).unwrap();
        let target = (threshold + epsilon * direction.sign()).max(0.0);
        let err = (euclidean_distance(&t.values, &shapelet).unwrap() - target).abs();
        worst = worst.max(err / threshold.max(1.0));
        if err > 1e-9 * threshold.max(1.0) {
            violations += 1;
        }
    }
    Outcome {
        pass: violations == 0,
        detail: format!("10000 transforms, {violations} outside tolerance, worst relative error {worst:.2e}"),
    }
}

fn criterion_3(successes: &[(ShapeletForest, TweakResult, String)]) -> Outcome {
    let mut bad = 0;
    for (forest, r, desired) in successes {
        if oracle_predict(forest, r.transformed.values()) != forest.class_of(desired).unwrap() {
            bad += 1;
        }
    }
    Outcome {
        pass: bad == 0 && !successes.is_empty(),
        detail: format!("{} successful results re-routed, {bad} disagree", successes.len()),
    }
}

fn criterion_4() -> Outcome {
    let mut instances = 0;
    let mut candidates = 0;
    let mut violations = 0;
    let configs = [
        TweakConfig::default(),
        TweakConfig {
            early_abandoning: false,
            ..Default::default()
        },
    ];
    'outer: for seed in 100..120 {
        let (forest, _, test) = small_problem(seed);
        for (series, desired) in triples(&forest, &test) {
            for config in &configs {
                let (_, traces) = tweak_irreversible_traced(&forest, &series, &desired, config).unwrap();
                for t in &traces {
                    candidates += 1;
                    violations += t.costs.windows(2).filter(|w| w[1] < w[0]).count();
                }
            }
            instances += 1;
            if instances == 100 {
                break 'outer;
            }
        }
    }
    Outcome {
        pass: instances == 100 && violations == 0,
        detail: format!("{instances} instances, {candidates} candidate traces, {violations} decreases"),
    }
}

struct TrendSeed {
    report: MetricsReport,
    name: String,
}

fn benchmark_reports() -> Vec<TrendSeed> {
    (0..5)
        .map(|seed| {
            let data = PlantedShapes::default().generate(250, seed);
            let config = ExperimentConfig {
                seed,
                forest: Hyperparameters {
                    seed,
                    ..Default::default()
                },
                methods: vec![Method::Rt, Method::Irt, Method::Nn],
                ..Default::default()
            };
            let name = format!("planted-{seed}");
            TrendSeed {
                report: run_experiment(&name, &data, &config).unwrap(),
                name,
            }
        })
        .collect()
}

fn criterion_5(runs: &[TrendSeed], seconds: f64) -> Outcome {
    let mut cost_ok = 0;
    let mut compact_ok = 0;
    let mut nn_compact: f64 = 1.0;
    let mut lines = Vec::new();
    for run in runs {
        let get = |m| run.report.row(&run.name, m).unwrap();
        let (rt, irt, nn) = (get(Method::Rt), get(Method::Irt), get(Method::Nn));
        let v = |x: Option<f64>| x.unwrap_or(f64::NAN);
        if v(rt.mean_cost) <= v(irt.mean_cost) && v(irt.mean_cost) < v(nn.mean_cost) {
            cost_ok += 1;
        }
        if v(irt.mean_compactness) <= v(rt.mean_compactness) && v(rt.mean_compactness) < v(nn.mean_compactness) {
            compact_ok += 1;
        }
        nn_compact = nn_compact.min(v(nn.mean_compactness));
        lines.push(format!(
            "{}: cost {:.4}/{:.4}/{:.4} compact {:.4}/{:.4}/{:.4} success {:.2}/{:.2}",
            run.name,
            v(rt.mean_cost),
            v(irt.mean_cost),
            v(nn.mean_cost),
            v(rt.mean_compactness),
            v(irt.mean_compactness),
            v(nn.mean_compactness),
            v(rt.success_rate),
            v(irt.success_rate),
        ));
    }
    Outcome {
        pass: cost_ok >= 4 && compact_ok >= 4 && nn_compact >= 0.95 && seconds < 600.0,
        detail: format!(
            "cost order in {cost_ok}/5 seeds, compactness order in {compact_ok}/5, min nn compactness {nn_compact:.4}, {seconds:.0}s\n      {}",
            lines.join("\n      ")
        ),
    }
}

fn criterion_7(runs: &[TrendSeed]) -> Outcome {
    let pruned = |m| -> Vec<f64> {
        runs.iter()
            .map(|r| r.report.row(&r.name, m).unwrap().pruned_fraction.unwrap_or(f64::NAN))
            .collect()
    };
    let rt = pruned(Method::Rt);
    let irt = pruned(Method::Irt);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (rt_avg, irt_avg) = (mean(&rt), mean(&irt));
    Outcome {
        pass: (0.3..=1.0).contains(&rt_avg) && rt_avg > irt_avg,
        detail: format!("rt pruned {rt_avg:.3} (per seed {rt:.3?}), irt abandoned {irt_avg:.3}"),
    }
}

/// Hand-built hitting-set style forests over binary series.
fn toy_instances() -> Vec<(usize, Vec<Vec<usize>>)> {
    vec![
        (3, vec![vec![1, 2], vec![2, 3]]),
        (3, vec![vec![1], vec![2], vec![3]]),
        (4, vec![vec![1, 2], vec![3, 4], vec![1, 3]]),
        (4, vec![vec![4], vec![4], vec![1, 2, 3]]),
        (5, vec![vec![1, 5], vec![2, 5], vec![3, 5], vec![4, 5]]),
        (5, vec![vec![1, 2, 3, 4, 5]]),
        (6, vec![vec![1, 2], vec![3, 4], vec![5, 6]]),
        (6, vec![vec![1, 2, 3], vec![3, 4, 5], vec![5, 6, 1], vec![2, 4, 6], vec![6]]),
        (7, vec![vec![7], vec![6, 7], vec![5, 6], vec![1, 2, 3]]),
        (8, vec![vec![1, 8], vec![2, 7], vec![3, 6], vec![4, 5], vec![1, 2, 3, 4], vec![5, 6, 7, 8]]),
        (8, vec![vec![8, 1], vec![8, 2], vec![8, 3]]),
        (9, vec![vec![1, 2, 3], vec![4, 5, 6], vec![7, 8, 9], vec![1, 4, 7], vec![2, 5, 8]]),
        (9, vec![vec![9, 3], vec![6], vec![3, 6, 9], vec![1, 5]]),
        (10, vec![vec![10], vec![9], vec![8], vec![7], vec![1, 7, 8, 9, 10]]),
        (10, vec![vec![2, 4, 6, 8, 10], vec![1, 3, 5, 7, 9], vec![5, 6]]),
        (11, vec![vec![1, 11], vec![2, 10], vec![3, 9], vec![4, 8], vec![5, 7], vec![6]]),
        (11, vec![vec![3, 4], vec![4, 5], vec![5, 6], vec![6, 7], vec![7, 8], vec![8, 3], vec![11]]),
        (12, vec![vec![12, 1], vec![2, 11], vec![3, 10]]),
        (12, vec![vec![1, 2, 3, 4], vec![4, 5, 6, 7], vec![7, 8, 9, 10], vec![10, 11, 12, 1], vec![6, 12], vec![2, 8]]),
        (12, vec![vec![5], vec![5, 6], vec![6, 7], vec![7, 8], vec![8, 5], vec![1, 12], vec![12, 2]]),
    ]
}

fn criterion_6() -> Outcome {
    let config = TweakConfig {
        epsilon: 0.5,
        ..Default::default()
    };
    let mut violations = 0;
    let mut greedy_successes = 0;
    let instances = toy_instances();
    for (n, sets) in &instances {
        let (forest, series) = hitting_set_instance(*n, sets).unwrap();
        let exact = brute_force_min_changes(&forest, &series, "1", *n).unwrap();
        let greedy = [
            tweak_reversible(&forest, &series, "1", &config).unwrap(),
            tweak_reversible_pruned(&forest, &series, "1", &config).unwrap(),
            tweak_irreversible(&forest, &series, "1", &config).unwrap(),
        ];
        for g in greedy.iter().filter(|g| g.success) {
            greedy_successes += 1;
            let changed = series
                .values()
                .iter()
                .zip(g.transformed.values())
                .filter(|(a, b)| a != b)
                .count();
            match &exact {
                Some(flips) if flips.len() <= changed => {}
                _ => violations += 1,
            }
        }
    }
    Outcome {
        pass: violations == 0 && instances.len() == 20,
        detail: format!(
            "{} instances, {greedy_successes} greedy successes compared, {violations} violations",
            instances.len()
        ),
    }
}

fn criterion_8() -> Outcome {
    let data = PlantedShapes {
        length: 48,
        ..Default::default()
    }
    .generate(60, 8);
    let hp = Hyperparameters {
        n_trees: 20,
        shapelets_per_node: 20,
        seed: 8,
        ..Default::default()
    };
    let a = train(&data, &hp).unwrap();
    let b = train(&data, &hp).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (pa, pb) = (dir.path().join("a.json"), dir.path().join("b.json"));
    persist::save(&a, &pa).unwrap();
    persist::save(&b, &pb).unwrap();
    let model_identical = std::fs::read(&pa).unwrap() == std::fs::read(&pb).unwrap();

    let loaded = persist::load(&pa).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut disagreements = 0;
    for _ in 0..1000 {
        let v: Vec<f64> = (0..48).map(|_| rng.gen_range(-4.0..4.0)).collect();
        if a.predict_class(&v).unwrap() != loaded.predict_class(&v).unwrap() {
            disagreements += 1;
        }
    }

    let config = ExperimentConfig {
        seed: 8,
        forest: hp,
        record_timing: false,
        ..Default::default()
    };
    let r1 = run_experiment("det", &data, &config).unwrap();
    let r2 = run_experiment("det", &data, &config).unwrap();
    let report_identical = r1.to_text() == r2.to_text()
        && r1.to_tsv() == r2.to_tsv()
        && r1.records_jsonl().unwrap() == r2.records_jsonl().unwrap();
    Outcome {
        pass: model_identical && report_identical && disagreements == 0 && loaded == a,
        detail: format!(
            "model bytes identical: {model_identical}, report identical: {report_identical}, {disagreements}/1000 predictions changed by round trip"
        ),
    }
}

fn find_ucr(root: &Path, name: &str, split: &str) -> Option<PathBuf> {
    ["tsv", "txt", "csv", ""]
        .iter()
        .flat_map(|ext| {
            let file = if ext.is_empty() {
                format!("{name}_{split}")
            } else {
                format!("{name}_{split}.{ext}")
            };
            [root.join(name).join(&file), root.join(&file)]
        })
        .find(|p| p.is_file())
}

fn criterion_9() -> Option<Outcome> {
    let root = PathBuf::from(std::env::var_os("UCR_ROOT")?);
    let mut details = Vec::new();
    let mut pass = true;
    for name in ["GunPoint", "ECG200"] {
        let (Some(tr), Some(te)) = (find_ucr(&root, name, "TRAIN"), find_ucr(&root, name, "TEST")) else {
            return None;
        };
        let train_set = tstweak::io::parse_ucr(tr, None).unwrap().records;
        let test_set = tstweak::io::parse_ucr(te, None).unwrap().records;
        let ids: Vec<usize> = (0..test_set.len()).collect();
        let config = ExperimentConfig {
            methods: vec![Method::Rt, Method::Nn],
            ..Default::default()
        };
        let rep = run_on_split(name, &train_set, &test_set, &ids, &config).unwrap();
        let rt = rep.row(name, Method::Rt).unwrap();
        let nn = rep.row(name, Method::Nn).unwrap();
        let ok = rt.forest_accuracy >= rt.nn_accuracy - 0.05
            && rt.mean_cost.unwrap_or(f64::INFINITY) < nn.mean_cost.unwrap_or(f64::NAN);
        pass &= ok;
        details.push(format!(
            "{name}: acc {:.4} vs 1-NN {:.4}, cost rt {:?} vs nn {:?}",
            rt.forest_accuracy, rt.nn_accuracy, rt.mean_cost, nn.mean_cost
        ));
    }
    Some(Outcome {
        pass,
        detail: details.join("; "),
    })
}

fn report(id: u8, name: &str, outcome: &Outcome) {
    let status = if outcome.pass { "PASS" } else { "FAIL" };
    println!("[{status}] criterion {id}: {name} ({})", outcome.detail);
}

fn main() {
    // `cargo test` passes filter arguments; this target always runs everything.
    let strict_trends = std::env::var("TSTWEAK_STRICT_TRENDS").is_ok_and(|v| v == "1");
    let mut failed_properties = Vec::new();
    let mut failed_trends = Vec::new();
    let mut property = |id: u8, name: &str, o: Outcome| {
        report(id, name, &o);
        if !o.pass {
            failed_properties.push(id);
        }
    };

    let start = Instant::now();
    let (c1, successes) = criterion_1();
    let c1_secs = start.elapsed().as_secs_f64();
    property(1, "pruned and early-abandoning tweaks equal their exhaustive versions", Outcome {
        pass: c1.pass && c1_secs < 120.0,
        detail: format!("{}, {c1_secs:.1}s", c1.detail),
    });
    property(2, "transformed windows land exactly on the target radius", criterion_2());
    property(3, "every success re-predicts as desired under independent routing", criterion_3(&successes));
    property(4, "irreversible candidate costs never decrease", criterion_4());
    property(6, "exhaustive oracle bounds the greedy edit counts", criterion_6());
    property(8, "seeded training and reports are byte-identical; model round trip", criterion_8());

    let start = Instant::now();
    let runs = benchmark_reports();
    let secs = start.elapsed().as_secs_f64();
    let mut trend = |id: u8, name: &str, o: Outcome| {
        report(id, name, &o);
        if !o.pass {
            failed_trends.push(id);
        }
    };
    trend(5, "cost and compactness ordering rt / irt / nn on the planted benchmark", criterion_5(&runs, secs));
    trend(7, "rt pruned fraction in [0.3, 1] and above irt abandoned fraction", criterion_7(&runs));
    match criterion_9() {
        Some(o) => trend(9, "GunPoint and ECG200 ordering", o),
        None => println!("[SKIP] criterion 9: GunPoint and ECG200 ordering (set UCR_ROOT to a directory with the UCR files)"),
    }

    // the nearest-neighbour tweak is exercised here only for success soundness
    let (forest, train_set, test) = small_problem(77);
    let nn_successes: Vec<_> = triples(&forest, &test)
        .into_iter()
        .filter_map(|(s, d)| {
            let r = tweak_nn(&forest, &s, &d, &train_set).ok()?;
            r.success.then_some((forest.clone(), r, d))
        })
        .collect();
    property(3, "nearest-neighbour successes re-predict as desired", criterion_3(&nn_successes));

    println!(
        "acceptance: {} property failures {:?}, {} trend failures {:?}",
        failed_properties.len(),
        failed_properties,
        failed_trends.len(),
        failed_trends
    );
    if !failed_properties.is_empty() || (strict_trends && !failed_trends.is_empty()) {
        std::process::exit(1);
    }
}
