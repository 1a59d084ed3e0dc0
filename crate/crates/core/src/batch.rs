//! Independent scenario runs for sweeps and mode comparisons.
//!
//! Each run is single-threaded and deterministic, so the parallel and
//! sequential paths return identical records in input order.

use crate::config::ScenarioConfig;
use crate::harness::{run, SimRecord};
use crate::Result;

pub fn run_many_sequential(configs: &[ScenarioConfig]) -> Vec<Result<SimRecord>> {
    configs.iter().map(run).collect()
}

#[cfg(feature = "parallel")]
pub fn run_many_parallel(configs: &[ScenarioConfig]) -> Vec<Result<SimRecord>> {
    use rayon::prelude::*;
    configs.par_iter().map(run).collect()
}

/// Parallel when the `parallel` feature is on, sequential otherwise.
pub fn run_many(configs: &[ScenarioConfig]) -> Vec<Result<SimRecord>> {
    #[cfg(feature = "parallel")]
    {
        run_many_parallel(configs)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_many_sequential(configs)
    }
}

/// Copies of `base` with seeds `first_seed..first_seed + count`.
pub fn seed_sweep(base: &ScenarioConfig, first_seed: u64, count: usize) -> Vec<ScenarioConfig> {
    (0..count as u64)
        .map(|k| {
            let mut c = base.clone();
            c.scenario.seed = first_seed + k;
            c
        })
        .collect()
}
