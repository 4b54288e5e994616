//! Shared fixtures for the criterion benchmarks.

use nicsim_core::scenario::{cell_scenario, default_scenario, ModLabel, Scenario};

/// A one-second d3200 cell at 5000 pps: the headline sweep configuration
/// shrunk to benchmark size.
pub fn bench_cell(rate_pps: u64) -> Scenario {
    let mut base = default_scenario(1);
    base.horizon_us = 1_000_000;
    cell_scenario(&base, ModLabel::Abs(3200), rate_pps).expect("valid bench cell")
}

/// A dense adversarial single-queue trace.
pub fn bench_trace(packets: usize) -> Vec<u64> {
    nicsim_core::reference::random_trace(packets, 0xbe9c)
}
