//! Seeded two-class benchmark data: Gaussian noise with one smooth shape
//! planted at a random position. Class `"1"` gets a bump, class `"-1"` the
//! mirrored dip, so both classes carry the same energy and only the local
//! shape tells them apart.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::series::{LabeledSeries, TimeSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedShapes {
    pub length: usize,
    pub noise: f64,
    pub amplitude: f64,
    /// Width of the planted bump (samples).
    pub width: usize,
}

impl Default for PlantedShapes {
    fn default() -> Self {
        Self {
            length: 128,
            noise: 0.5,
            amplitude: 3.0,
            width: 16,
        }
    }
}

impl PlantedShapes {
    /// `n` series alternating between labels `"1"` (bump) and `"-1"` (dip).
    pub fn generate(&self, n: usize, seed: u64) -> Vec<LabeledSeries> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let bump = i % 2 == 0;
                let mut v: Vec<f64> = (0..self.length)
                    .map(|_| self.noise * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                let sign = if bump { 1.0 } else { -1.0 };
                let width = self.width.min(self.length);
                let start = rng.gen_range(0..=self.length - width);
                for k in 0..width {
                    // raised cosine
                    let phase = (k as f64 + 0.5) / width as f64;
                    let shape = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * phase).cos();
                    v[start + k] += sign * self.amplitude * shape;
                }
                let label = if bump { "1" } else { "-1" };
                LabeledSeries::new(label, TimeSeries::new(v).expect("finite by construction"))
            })
            .collect()
    }
}
