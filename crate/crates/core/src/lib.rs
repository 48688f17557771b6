//! Random shapelet forests for time series classification, and greedy
//! algorithms that tweak a series until the forest predicts a desired class
//! at low Euclidean cost.
//!
//! ```no_run
//! use tstweak::{forest, tweak, io};
//!
//! let data = io::parse_ucr("GunPoint_TRAIN.tsv", None)?;
//! let forest = forest::train(&data.records, &forest::Hyperparameters::default())?;
//! let series = &data.records[0].series;
//! let target = forest.labels().iter().find(|l| *l != forest.predict(series).unwrap()).unwrap();
//! let result = tweak::tweak_reversible_pruned(&forest, series, target, &Default::default())?;
//! println!("cost {:.4}, success {}", result.cost, result.success);
//! # Ok::<(), tstweak::Error>(())
//! ```

pub mod error;
pub mod eval;
pub mod forest;
pub mod io;
pub mod persist;
pub mod series;
pub mod synthetic;
pub mod tweak;

pub use error::{Error, Result};
pub use forest::{
    condition_test, train, DecisionPath, Direction, Hyperparameters, PathCondition, ShapeletForest, ShapeletTree,
};
pub use series::{
    euclidean_distance, matches_within, subsequence_distance, LabeledSeries, MatchLocation, Shapelet, TimeSeries,
};
pub use tweak::{TweakConfig, TweakResult};
