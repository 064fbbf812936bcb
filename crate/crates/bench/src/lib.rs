//! Fixtures shared by the benchmarks.

use sdebound_core::brownian::uniform_grid;
use sdebound_core::harness::experiment::master_path;
use sdebound_core::harness::{ExperimentConfig, Setup};
use sdebound_core::BrownianPath;

/// The default experiment with benchmark-sized Monte Carlo settings.
pub fn setup() -> Setup {
    let cfg = ExperimentConfig {
        num_paths: 64,
        ..ExperimentConfig::default()
    };
    Setup::new(&cfg).expect("default config is valid")
}

/// Master path 0 on a `2^exp` grid of `[0, T]`.
pub fn path(setup: &Setup, exp: u32) -> BrownianPath {
    let grid = uniform_grid(setup.cs.t_end(), 1usize << exp);
    master_path(setup.config.master_seed, &grid, 0).expect("valid grid")
}
