//! `tstweak`: train shapelet forests, tweak series toward a label, run the
//! evaluation protocol and the exhaustive toy oracle.
//!
//! Exit codes: 0 ok, 1 I/O or other failure, 2 usage, 3 dataset parse error,
//! 4 contract violation, 5 no successful tweak (or no oracle solution
//! within `k`), 6 no tweak needed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use tstweak::eval::{compactness, run_experiment, ExperimentConfig, MetricsReport, Method};
use tstweak::io::{self, Delimiter, PlotKind};
use tstweak::tweak::{self, TweakConfig, TweakResult, ORACLE_MAX_LEN};
use tstweak::{persist, Error, Hyperparameters, LabeledSeries, ShapeletForest};

const EXIT_IO: u8 = 1;
const EXIT_PARSE: u8 = 3;
const EXIT_CONTRACT: u8 = 4;
const EXIT_NO_SUCCESS: u8 = 5;
const EXIT_NO_TWEAK_NEEDED: u8 = 6;

#[derive(Parser)]
#[command(name = "tstweak", version, about = "Shapelet forest time series tweaking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a forest and write the model file.
    Train(TrainArgs),
    /// Predict labels for a dataset and report accuracy.
    Predict(PredictArgs),
    /// Tweak series toward a target label; writes plot data and an edit log.
    Tweak(TweakArgs),
    /// Run the split / train / tweak protocol and write result tables.
    Evaluate(EvaluateArgs),
    /// Exhaustive minimum-change search on a hitting-set toy instance.
    Oracle(OracleArgs),
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Column delimiter; detected from the first row when omitted.
    #[arg(long, value_parser = parse_delimiter)]
    delimiter: Option<Delimiter>,
    /// Z-normalize every series at load time.
    #[arg(long)]
    normalize: bool,
}

#[derive(Args, Clone)]
struct ForestArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    trees: usize,
    #[arg(long, default_value_t = 100)]
    shapelets_per_node: usize,
    #[arg(long, default_value_t = 2)]
    min_len: usize,
    /// Defaults to the shortest training series.
    #[arg(long)]
    max_len: Option<usize>,
    /// Grow every tree on the full training set instead of a bootstrap sample.
    #[arg(long)]
    no_bootstrap: bool,
}

impl ForestArgs {
    fn hyperparameters(&self) -> Hyperparameters {
        Hyperparameters {
            n_trees: self.trees,
            shapelets_per_node: self.shapelets_per_node,
            min_len: self.min_len,
            max_len: self.max_len,
            seed: self.seed,
            bootstrap: !self.no_bootstrap,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data_opts: DataArgs,
    #[command(flatten)]
    forest: ForestArgs,
    /// Hold out this stratified fraction and report accuracy on it.
    #[arg(long)]
    test_fraction: Option<f64>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    data_opts: DataArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum TweakMethod {
    Rt,
    Irt,
    Nn,
}

impl TweakMethod {
    fn name(self) -> &'static str {
        match self {
            TweakMethod::Rt => "rt",
            TweakMethod::Irt => "irt",
            TweakMethod::Nn => "nn",
        }
    }
}

#[derive(Args)]
struct TweakArgs {
    #[arg(long)]
    model: PathBuf,
    /// Series to tweak (labels in this file are ignored).
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    data_opts: DataArgs,
    /// Zero-based row(s) of `--data`; every row when omitted.
    #[arg(long = "instance")]
    instances: Vec<usize>,
    #[arg(long)]
    target_label: String,
    #[arg(long, value_enum, default_value_t = TweakMethod::Rt)]
    method: TweakMethod,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    /// Labeled training series, required by `--method nn`.
    #[arg(long)]
    train_data: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-9)]
    compactness_e: f64,
    /// Directory for plot files and the report.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Dataset file(s). A UCR `_TRAIN`/`_TEST` pair is pooled before splitting.
    #[arg(long = "data", required = true)]
    data: Vec<PathBuf>,
    #[command(flatten)]
    data_opts: DataArgs,
    #[command(flatten)]
    forest: ForestArgs,
    /// Methods to run, comma separated (rt, rt-unpruned, irt, nn).
    #[arg(long, value_delimiter = ',', default_value = "rt,rt-unpruned,irt,nn")]
    methods: Vec<Method>,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    #[arg(long, default_value_t = 1e-9)]
    compactness_e: f64,
    /// `source:target` label pair; repeat for several. Both directions of a
    /// two-class dataset when omitted.
    #[arg(long = "label-pair", value_parser = parse_pair)]
    label_pairs: Vec<(String, String)>,
    /// Leave runtime columns empty so repeated runs give identical files.
    #[arg(long)]
    no_timing: bool,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    /// Series length (number of elements).
    #[arg(long, requires = "sets")]
    n: Option<usize>,
    /// Sets of 1-based elements, e.g. "1,2;2,3". Defaults to that instance.
    #[arg(long, requires = "n")]
    sets: Option<String>,
    /// Largest number of flips to try; defaults to the series length.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
}

fn parse_delimiter(s: &str) -> Result<Delimiter, String> {
    s.parse()
}

fn parse_pair(s: &str) -> Result<(String, String), String> {
    match s.split_once(':') {
        Some((a, b)) if !a.is_empty() && !b.is_empty() => Ok((a.to_string(), b.to_string())),
        _ => Err(format!("expected source:target, got '{s}'")),
    }
}

fn parse_sets(s: &str) -> anyhow::Result<Vec<Vec<usize>>> {
    s.split(';')
        .map(|set| {
            set.split(',')
                .map(|e| e.trim().parse::<usize>().with_context(|| format!("bad element '{e}' in --sets")))
                .collect()
        })
        .collect()
}

fn log_config(command: &str, config: serde_json::Value) {
    eprintln!("{}", json!({ "command": command, "config": config }));
}

fn load_data(path: &Path, opts: &DataArgs) -> tstweak::Result<io::DatasetFile> {
    let mut file = io::parse_ucr(path, opts.delimiter)?;
    if opts.normalize {
        file.z_normalize();
    }
    Ok(file)
}

/// Outcome of a subcommand that succeeded as a program but carries a status.
struct Status(u8);

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Tweak(a) => cmd_tweak(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Oracle(a) => cmd_oracle(a),
    };
    match result {
        Ok(Status(code)) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = match err.downcast_ref::<Error>() {
                Some(Error::Parse { .. }) => EXIT_PARSE,
                Some(Error::Contract(_)) | Some(Error::Experiment(_)) | Some(Error::Training(_)) => EXIT_CONTRACT,
                Some(Error::AlreadyDesired(_)) => EXIT_NO_TWEAK_NEEDED,
                _ => EXIT_IO,
            };
            ExitCode::from(code)
        }
    }
}

fn cmd_train(a: TrainArgs) -> anyhow::Result<Status> {
    let hp = a.forest.hyperparameters();
    log_config(
        "train",
        json!({
            "data": a.data, "model": a.model, "delimiter": a.data_opts.delimiter,
            "normalize": a.data_opts.normalize, "hyperparameters": hp, "test_fraction": a.test_fraction,
        }),
    );
    let file = load_data(&a.data, &a.data_opts)?;
    let (train_set, held_out) = match a.test_fraction {
        Some(f) => {
            let (tr, te) = tstweak::eval::stratified_split(&file.records, f, hp.seed)?;
            let pick = |idx: Vec<usize>| idx.into_iter().map(|i| file.records[i].clone()).collect::<Vec<_>>();
            (pick(tr), pick(te))
        }
        None => (file.records.clone(), Vec::new()),
    };
    let forest = tstweak::train(&train_set, &hp)?;
    persist::save(&forest, &a.model)?;
    let train_acc = tstweak::eval::accuracy(&forest, &train_set)?;
    let held_acc = if held_out.is_empty() {
        None
    } else {
        Some(tstweak::eval::accuracy(&forest, &held_out)?)
    };
    let (lo, hi) = file.length_range();
    println!(
        "{}",
        json!({
            "model": a.model, "rows": file.rows(), "length": [lo, hi], "labels": forest.labels(),
            "trees": forest.trees().len(), "train_rows": train_set.len(), "train_accuracy": train_acc,
            "held_out_rows": held_out.len(), "held_out_accuracy": held_acc,
        })
    );
    Ok(Status(0))
}

fn cmd_predict(a: PredictArgs) -> anyhow::Result<Status> {
    log_config(
        "predict",
        json!({ "model": a.model, "data": a.data, "delimiter": a.data_opts.delimiter, "normalize": a.data_opts.normalize }),
    );
    let forest = persist::load(&a.model)?;
    let file = load_data(&a.data, &a.data_opts)?;
    let mut correct = 0;
    for (i, r) in file.records.iter().enumerate() {
        let p = forest.predict(&r.series)?;
        correct += usize::from(p == r.label);
        println!("{i}\t{}\t{p}", r.label);
    }
    eprintln!("accuracy {}", correct as f64 / file.rows() as f64);
    Ok(Status(0))
}

fn run_tweak(
    method: TweakMethod,
    forest: &ShapeletForest,
    series: &tstweak::TimeSeries,
    target: &str,
    config: &TweakConfig,
    training: &[LabeledSeries],
) -> tstweak::Result<TweakResult> {
    match method {
        TweakMethod::Rt => tweak::tweak_reversible_pruned(forest, series, target, config),
        TweakMethod::Irt => tweak::tweak_irreversible(forest, series, target, config),
        TweakMethod::Nn => {
            if forest.predict(series)? == target {
                return Err(Error::AlreadyDesired(target.to_string()));
            }
            tweak::tweak_nn(forest, series, target, training)
        }
    }
}

fn cmd_tweak(a: TweakArgs) -> anyhow::Result<Status> {
    let config = TweakConfig {
        epsilon: a.epsilon,
        ..Default::default()
    };
    log_config(
        "tweak",
        json!({
            "model": a.model, "data": a.data, "delimiter": a.data_opts.delimiter, "normalize": a.data_opts.normalize,
            "instances": a.instances, "target_label": a.target_label, "method": a.method.name(),
            "tweak": config, "train_data": a.train_data, "compactness_e": a.compactness_e, "out_dir": a.out_dir,
        }),
    );
    config.validate()?;
    let forest = persist::load(&a.model)?;
    forest.class_of(&a.target_label)?;
    let file = load_data(&a.data, &a.data_opts)?;
    let training = match (a.method, &a.train_data) {
        (TweakMethod::Nn, Some(p)) => load_data(p, &a.data_opts)?.records,
        (TweakMethod::Nn, None) => bail!(Error::Contract("--method nn needs --train-data".into())),
        _ => Vec::new(),
    };
    let instances: Vec<usize> = if a.instances.is_empty() {
        (0..file.rows()).collect()
    } else {
        a.instances.clone()
    };
    if let Some(&bad) = instances.iter().find(|&&i| i >= file.rows()) {
        bail!(Error::Contract(format!("instance {bad} out of range (file has {} rows)", file.rows())));
    }
    std::fs::create_dir_all(&a.out_dir)?;
    let method = a.method.name();
    let name = file.name();
    let (mut tweaked, mut succeeded, mut not_needed) = (0, 0, 0);
    for &i in &instances {
        let original = &file.records[i].series;
        let before = forest.predict(original)?.to_string();
        let stem = format!("{name}_{i}");
        let result = match run_tweak(a.method, &forest, original, &a.target_label, &config, &training) {
            Err(Error::AlreadyDesired(_)) => {
                not_needed += 1;
                println!("{}", json!({ "instance": i, "before": before, "status": "no tweak needed" }));
                continue;
            }
            other => other?,
        };
        tweaked += 1;
        succeeded += usize::from(result.success);
        let after = forest.predict(&result.transformed)?.to_string();
        let compact = compactness(original, &result.transformed, a.compactness_e)?;
        let report = json!({
            "instance": i, "method": method, "target_label": a.target_label, "before": before, "after": after,
            "success": result.success, "cost": result.cost, "compactness": compact,
            "candidate": result.candidate, "stats": result.stats, "diagnostic": result.diagnostic,
            "edits": result.edits,
        });
        let out = |kind, values: &[f64]| {
            io::write_atomic(
                &a.out_dir.join(io::plot_file_name(&stem, kind, method)),
                io::format_plot_series(values).as_bytes(),
            )
        };
        out(PlotKind::Original, original.values())?;
        out(PlotKind::Tweaked, result.transformed.values())?;
        io::write_atomic(
            &a.out_dir.join(format!("{stem}.edits.{method}.json")),
            format!("{}\n", serde_json::to_string_pretty(&report)?).as_bytes(),
        )?;
        println!("{report}");
    }
    Ok(Status(if tweaked == 0 && not_needed > 0 {
        EXIT_NO_TWEAK_NEEDED
    } else if succeeded < tweaked {
        EXIT_NO_SUCCESS
    } else {
        0
    }))
}

/// Group files by dataset name, pooling a UCR `_TRAIN`/`_TEST` sibling that
/// was not listed explicitly.
fn dataset_groups(paths: &[PathBuf]) -> BTreeMap<String, Vec<PathBuf>> {
    let mut groups: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
    for p in paths {
        let entry = groups.entry(io::dataset_name(p)).or_default();
        let mut add = |q: PathBuf| {
            if !entry.contains(&q) {
                entry.push(q);
            }
        };
        add(p.clone());
        let file = p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        for (from, to) in [("_TRAIN", "_TEST"), ("_TEST", "_TRAIN")] {
            if file.contains(from) {
                let sibling = p.with_file_name(file.replacen(from, to, 1));
                if sibling.is_file() {
                    add(sibling);
                }
            }
        }
    }
    for files in groups.values_mut() {
        files.sort();
    }
    groups
}

fn cmd_evaluate(a: EvaluateArgs) -> anyhow::Result<Status> {
    let config = ExperimentConfig {
        test_fraction: a.test_fraction,
        compactness_e: a.compactness_e,
        seed: a.forest.seed,
        methods: a.methods.clone(),
        forest: a.forest.hyperparameters(),
        tweak: TweakConfig {
            epsilon: a.epsilon,
            ..Default::default()
        },
        label_pairs: (!a.label_pairs.is_empty()).then(|| a.label_pairs.clone()),
        record_timing: !a.no_timing,
    };
    let groups = dataset_groups(&a.data);
    log_config(
        "evaluate",
        json!({
            "datasets": groups, "delimiter": a.data_opts.delimiter, "normalize": a.data_opts.normalize,
            "experiment": config, "out_dir": a.out_dir,
        }),
    );
    config.validate()?;
    let mut report = MetricsReport::default();
    for (name, files) in &groups {
        let mut records = Vec::new();
        for f in files {
            records.extend(load_data(f, &a.data_opts)?.records);
        }
        eprintln!("{name}: {} series from {} file(s)", records.len(), files.len());
        report.extend(run_experiment(name, &records, &config)?);
    }
    std::fs::create_dir_all(&a.out_dir)?;
    let text = report.to_text();
    io::write_atomic(&a.out_dir.join("table.txt"), text.as_bytes())?;
    io::write_atomic(&a.out_dir.join("metrics.tsv"), report.to_tsv().as_bytes())?;
    io::write_atomic(&a.out_dir.join("records.jsonl"), report.records_jsonl()?.as_bytes())?;
    print!("{text}");
    Ok(Status(0))
}

fn cmd_oracle(a: OracleArgs) -> anyhow::Result<Status> {
    let (n, sets) = match (a.n, &a.sets) {
        (Some(n), Some(s)) => (n, parse_sets(s)?),
        _ => (3, vec![vec![1, 2], vec![2, 3]]),
    };
    let k = a.k.unwrap_or(n);
    log_config("oracle", json!({ "n": n, "sets": sets, "k": k, "epsilon": a.epsilon }));
    if n > ORACLE_MAX_LEN {
        bail!(Error::Contract(format!(
            "length {n} is above the exhaustive-search cap of {ORACLE_MAX_LEN}; \
             use a smaller instance or the greedy tweak command"
        )));
    }
    let (forest, series) = tweak::hitting_set_instance(n, &sets)?;
    let exact = tweak::brute_force_min_changes(&forest, &series, "1", k)?;
    let config = TweakConfig {
        epsilon: a.epsilon,
        ..Default::default()
    };
    let mut greedy = serde_json::Map::new();
    for (label, r) in [
        ("rt", tweak::tweak_reversible_pruned(&forest, &series, "1", &config)?),
        ("irt", tweak::tweak_irreversible(&forest, &series, "1", &config)?),
    ] {
        let changed: Vec<usize> = (0..n)
            .filter(|&i| series.values()[i] != r.transformed.values()[i])
            .collect();
        greedy.insert(
            label.into(),
            json!({ "success": r.success, "cost": r.cost, "changed_positions": changed.iter().map(|i| i + 1).collect::<Vec<_>>() }),
        );
    }
    let flips = exact.as_ref().map(|f| f.iter().map(|i| i + 1).collect::<Vec<_>>());
    println!(
        "{}",
        json!({
            "n": n, "sets": sets, "k": k,
            "status": if exact.is_some() { "solved" } else { "no solution within k" },
            "min_changes": flips.as_ref().map(Vec::len), "positions": flips, "greedy": greedy,
        })
    );
    Ok(Status(if exact.is_some() { 0 } else { EXIT_NO_SUCCESS }))
}
