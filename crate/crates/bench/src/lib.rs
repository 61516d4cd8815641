//! Shared fixtures for the benchmarks.

#![allow(clippy::approx_constant)]

use lppl_core::{generate, Grid, LpplParams, PriceSeries, Regime, SynthSpec};

/// Noisy LPPL series on days `0..len` whose critical time lies `lead` days
/// after the last observation.
pub fn bubble(len: usize, lead: f64, seed: u64) -> PriceSeries {
    let end = len as f64 - 1.0;
    let spec = SynthSpec {
        regime: Regime::Lppl { params: LpplParams::new(end + lead, 0.5, 6.28, 1.0, 8.0, -1.0, 0.05) },
        grid: Grid { start: 0.0, end, step: 1.0 },
        noise_sigma: 0.01,
        seed,
    };
    generate(&spec).expect("fixture parameters are valid").series
}
