//! Detection of bubble signatures in price series with the log-periodic
//! power law (LPPL), together with the growth and pricing models around it.
//!
//! - [`timeseries`]: CSV ingestion, validation and windowing.
//! - [`model`]: closed-form LPPL, Gordon-Shapiro, growth and cascade formulas.
//! - [`calibration`]: single-window LPPL fits and their qualification.
//! - [`scanner`]: rolling-window ensembles, alarm index and critical-time bands.
//! - [`synth`]: seeded synthetic series with known ground truth.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod error;
pub mod model;
pub mod numfmt;
pub mod scanner;
pub mod synth;
pub mod timeseries;

pub use calibration::{
    classify_sign, fit_window, qualify, solve_linear, BubbleSign, FilterConfig, FitResult, LinearFit, SearchConfig,
    Verdict,
};
pub use error::{Error, Result};
pub use model::{CascadeState, DividendModel, GrowthSpec, LpplParams};
pub use scanner::{alarm_index, report, scan, tc_distribution, AlarmReport, ScanConfig, TcBand, TcEstimate};
pub use synth::{generate, Grid, Regime, SynthSpec, Synthetic};
pub use timeseries::{load_csv, save_csv, FitWindow, LoadOptions, PriceSeries};

/// Seed used whenever the caller does not supply one.
pub const DEFAULT_SEED: u64 = 20_140_408;
