//! Shared setup for the simulation benchmarks.

use uavsim_core::config::SimConfig;
use uavsim_core::deployment::{build_network, drop_ues, NetworkLayout, UePopulation};

/// Stock 19-site case-5 configuration with a fixed seed.
pub fn bench_config() -> SimConfig {
    let mut cfg = SimConfig::default();
    cfg.scenario.seed = 7;
    cfg
}

/// Layout plus one dropped population for per-stage benchmarks.
pub fn bench_snapshot(cfg: &SimConfig) -> (NetworkLayout, UePopulation) {
    let layout = build_network(cfg).expect("default config builds");
    let pop = drop_ues(&layout, &cfg.scenario, cfg.scenario.seed);
    (layout, pop)
}
