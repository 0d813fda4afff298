//! Times 1000 steps of a 64×64 world with ten kernels.

use std::time::Instant;

use flowlenia::engine::{GrowthSpec, InitLayout, KernelSpec, Ring, Rules, SimConfig, WorldConfig};
use flowlenia::genome::{MixingConfig, MutationConfig};
use flowlenia::run::{simulate, Recording};

fn main() {
    let k = 10;
    let kernels = (0..k)
        .map(|i| KernelSpec {
            radius: 6.0 + (i % 4) as f64,
            rings: vec![Ring { a: 0.3 + 0.05 * i as f64, w: 0.15, b: 1.0 }],
            source: 0,
            target: 0,
        })
        .collect();
    let growths = (0..k).map(|i| GrowthSpec { mu: 0.1 + 0.02 * i as f64, sigma: 0.05 }).collect();
    let config = WorldConfig {
        sim: SimConfig { grid_size: 64, steps: std::env::args().nth(1).map_or(1000, |s| s.parse().unwrap()), ..Default::default() },
        rules: Rules { kernels, growths },
        mixing: MixingConfig::default(),
        mutation: MutationConfig::default(),
        initial_weights: vec![0.5; k],
        initial_mixing: vec![0.5; k],
        obstacles: Default::default(),
        init: InitLayout::default(),
    };
    let start = Instant::now();
    let record = simulate(&config, Recording::default()).expect("valid config");
    println!(
        "{} steps in {:.2?} (diverged: {:?}, max drift {:e})",
        record.steps_run,
        start.elapsed(),
        record.divergence,
        record.max_step_drift
    );
}
