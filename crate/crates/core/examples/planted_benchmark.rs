//! Run the evaluation protocol on the planted-shape benchmark.
//!
//! `cargo run --release --example planted_benchmark -- [trees] [shapelets] [seeds]`

use std::time::Instant;

use tstweak::eval::{run_experiment, ExperimentConfig};
use tstweak::forest::Hyperparameters;
use tstweak::synthetic::PlantedShapes;

fn main() -> tstweak::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse().expect("integer")).collect();
    let trees = args.first().copied().unwrap_or(100);
    let shapelets = args.get(1).copied().unwrap_or(100);
    let seeds = args.get(2).copied().unwrap_or(5) as u64;
    for seed in 0..seeds {
        let data = PlantedShapes::default().generate(250, seed);
        let config = ExperimentConfig {
            seed,
            forest: Hyperparameters {
                n_trees: trees,
                shapelets_per_node: shapelets,
                seed,
                ..Default::default()
            },
            ..Default::default()
        };
        let start = Instant::now();
        let report = run_experiment(&format!("planted-{seed}"), &data, &config)?;
        print!("{}", report.to_text());
        println!("({:.1}s)\n", start.elapsed().as_secs_f64());
    }
    Ok(())
}
