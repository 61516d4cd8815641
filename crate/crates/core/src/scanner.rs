//! Rolling-window ensembles: many fits over (window length × end date),
//! aggregated per end date into an alarm index and a critical-time band.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{fit_window, BubbleSign, FilterConfig, FitResult, SearchConfig};
use crate::error::{Error, Result};
use crate::numfmt::fmt_sig;
use crate::timeseries::{PriceSeries, DEFAULT_MIN_POINTS};

/// Geometric ladder of window lengths from `min` up to `max`.
pub fn geometric_ladder(min: f64, max: f64, factor: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut len = min;
    while len <= max * (1.0 + 1e-12) {
        out.push(len);
        len *= factor;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanConfig {
    /// Window durations in time units.
    pub window_lengths: Vec<f64>,
    /// Scan every k-th observation, counting back from the last one.
    pub every: usize,
    /// Explicit end dates; each resolves to the last observation at or before it.
    pub end_dates: Option<Vec<f64>>,
    pub min_points: usize,
    pub search: SearchConfig,
    pub filters: FilterConfig,
    /// Probabilities of the lower and upper critical-time quantiles.
    pub band: (f64, f64),
    pub seed: u64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            window_lengths: geometric_ladder(60.0, 750.0, 1.3),
            every: 5,
            end_dates: None,
            min_points: DEFAULT_MIN_POINTS,
            search: SearchConfig::default(),
            filters: FilterConfig::default(),
            band: (0.1, 0.9),
            seed: crate::DEFAULT_SEED,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_lengths.is_empty() || self.window_lengths.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidParameter("window lengths must be a nonempty list of positive values".into()));
        }
        if self.every == 0 {
            return Err(Error::InvalidParameter("every must be at least 1".into()));
        }
        let (lo, hi) = self.band;
        if !(0.0 < lo && lo <= 0.5 && (0.5..1.0).contains(&hi)) {
            return Err(Error::InvalidParameter(format!("band ({lo}, {hi}) must satisfy 0 < low <= 0.5 <= high < 1")));
        }
        self.search.validate()?;
        self.filters.validate()
    }

    /// Observation indices used as window ends, in increasing order.
    pub fn end_indices(&self, series: &PriceSeries) -> Result<Vec<usize>> {
        let times = series.times();
        match &self.end_dates {
            Some(dates) => {
                let mut idx = Vec::with_capacity(dates.len());
                for &d in dates {
                    if !(d >= series.first_time() && d <= series.last_time()) {
                        return Err(Error::InvalidParameter(format!(
                            "end date {d} outside series span [{}, {}]",
                            series.first_time(),
                            series.last_time()
                        )));
                    }
                    idx.push(times.partition_point(|&t| t <= d) - 1);
                }
                idx.sort_unstable();
                idx.dedup();
                Ok(idx)
            }
            None => {
                let last = series.len() - 1;
                let mut idx: Vec<usize> = (0..=last).rev().step_by(self.every).collect();
                idx.reverse();
                Ok(idx)
            }
        }
    }
}

/// Ensemble of fits plus coverage accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct Scan {
    pub fits: Vec<FitResult>,
    pub end_dates: Vec<f64>,
    /// Pairs whose window leaves the series span or holds too few points.
    pub skipped: usize,
    /// Feasible pairs whose calibration failed outright.
    pub failed: usize,
}

/// Distinct seed for the fit at `pair`.
fn pair_seed(seed: u64, pair: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ pair.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fits every feasible (window length, end date) pair.
pub fn scan(series: &PriceSeries, config: &ScanConfig) -> Result<Scan> {
    config.validate()?;
    let ends = config.end_indices(series)?;
    let times = series.times();
    let first = series.first_time();

    let mut pairs = Vec::new();
    let mut skipped = 0;
    for &end in &ends {
        let t2 = times[end];
        for (w, &length) in config.window_lengths.iter().enumerate() {
            let t1 = t2 - length;
            let pair_id = (end as u64) << 16 | w as u64;
            if t1 < first - 1e-9 * length {
                skipped += 1;
                continue;
            }
            match series.slice_with_min(t1.max(first), t2, config.min_points) {
                Ok(mut window) => {
                    window.t1 = t1;
                    pairs.push((window, pair_seed(config.seed, pair_id)));
                }
                Err(_) => skipped += 1,
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::NoFeasiblePair { skipped });
    }

    let results: Vec<Option<FitResult>> = pairs
        .par_iter()
        .map(|(window, seed)| fit_window(series, window, &config.search, &config.filters, *seed).ok())
        .collect();
    let failed = results.iter().filter(|r| r.is_none()).count();
    let fits: Vec<FitResult> = results.into_iter().flatten().collect();
    if fits.is_empty() {
        return Err(Error::NoFeasiblePair { skipped: skipped + failed });
    }
    Ok(Scan { fits, end_dates: ends.iter().map(|&i| times[i]).collect(), skipped, failed })
}

/// Fraction of qualified fits among those whose window ends at `date`.
pub fn alarm_index(ensemble: &[FitResult], date: f64) -> f64 {
    let (qualified, total) = ensemble
        .iter()
        .filter(|f| f.window.t2 == date)
        .fold((0usize, 0usize), |(q, n), f| (q + f.qualified as usize, n + 1));
    if total == 0 {
        0.0
    } else {
        qualified as f64 / total as f64
    }
}

/// Nearest-rank empirical quantile of sorted samples: the value at rank
/// `ceil(p·n)`, clamped to `1..=n`.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TcBand {
    pub low: f64,
    pub median: f64,
    pub high: f64,
}

impl TcBand {
    pub fn covers(&self, t: f64) -> bool {
        self.low <= t && t <= self.high
    }
}

/// Critical-time quantiles at one date, or the absence of any qualified fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TcEstimate {
    NoSignal,
    Band(TcBand),
}

impl TcEstimate {
    pub fn band(&self) -> Option<&TcBand> {
        match self {
            TcEstimate::Band(b) => Some(b),
            TcEstimate::NoSignal => None,
        }
    }
}

/// Quantiles `(low, 0.5, high)` of the qualified critical times at `date`.
pub fn tc_distribution(ensemble: &[FitResult], date: f64, band: (f64, f64)) -> TcEstimate {
    let mut samples: Vec<f64> =
        ensemble.iter().filter(|f| f.window.t2 == date && f.qualified).map(|f| f.params.t_c).collect();
    band_of(&mut samples, band)
}

fn band_of(samples: &mut [f64], band: (f64, f64)) -> TcEstimate {
    if samples.is_empty() {
        return TcEstimate::NoSignal;
    }
    samples.sort_by(f64::total_cmp);
    TcEstimate::Band(TcBand {
        low: nearest_rank(samples, band.0),
        median: nearest_rank(samples, 0.5),
        high: nearest_rank(samples, band.1),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DateRecord {
    pub date: f64,
    pub alarm: f64,
    pub qualified: usize,
    pub total: usize,
    pub positive: usize,
    pub negative: usize,
    /// Dominant sign among qualified fits.
    pub sign: BubbleSign,
    pub tc_samples: Vec<f64>,
    pub tc: TcEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlarmReport {
    pub label: String,
    pub band: (f64, f64),
    pub dates: Vec<DateRecord>,
    pub fits: usize,
    pub skipped_pairs: usize,
    pub failed_fits: usize,
    /// First scan date by which an earlier median critical time has already
    /// passed. This is one reading of the "50% crash probability" marker.
    pub median_passed: Option<f64>,
}

impl AlarmReport {
    pub fn max_alarm(&self) -> f64 {
        self.dates.iter().map(|d| d.alarm).fold(0.0, f64::max)
    }

    pub fn mean_alarm(&self) -> f64 {
        if self.dates.is_empty() {
            return 0.0;
        }
        self.dates.iter().map(|d| d.alarm).sum::<f64>() / self.dates.len() as f64
    }

    pub fn last(&self) -> Option<&DateRecord> {
        self.dates.last()
    }

    /// Flat per-date table: `date,alarm,qualified,total,tc_q10,tc_median,tc_q90,sign`.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["date", "alarm", "qualified", "total", "tc_q10", "tc_median", "tc_q90", "sign"])?;
        for d in &self.dates {
            let (lo, med, hi) = match d.tc {
                TcEstimate::Band(b) => (fmt_sig(b.low), fmt_sig(b.median), fmt_sig(b.high)),
                TcEstimate::NoSignal => (String::new(), String::new(), String::new()),
            };
            w.write_record([
                fmt_sig(d.date),
                fmt_sig(d.alarm),
                d.qualified.to_string(),
                d.total.to_string(),
                lo,
                med,
                hi,
                d.sign.as_str().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Aggregates a finished scan per end date.
pub fn summarize(label: &str, scan: &Scan, band: (f64, f64)) -> AlarmReport {
    let mut dates = Vec::with_capacity(scan.end_dates.len());
    for &date in &scan.end_dates {
        let at: Vec<&FitResult> = scan.fits.iter().filter(|f| f.window.t2 == date).collect();
        let qualified: Vec<&&FitResult> = at.iter().filter(|f| f.qualified).collect();
        let positive = qualified.iter().filter(|f| f.sign == BubbleSign::PositiveBubble).count();
        let negative = qualified.iter().filter(|f| f.sign == BubbleSign::NegativeBubble).count();
        let sign = match positive.cmp(&negative) {
            std::cmp::Ordering::Greater => BubbleSign::PositiveBubble,
            std::cmp::Ordering::Less => BubbleSign::NegativeBubble,
            std::cmp::Ordering::Equal => BubbleSign::None,
        };
        let tc_samples: Vec<f64> = qualified.iter().map(|f| f.params.t_c).collect();
        let mut sorted = tc_samples.clone();
        let tc = band_of(&mut sorted, band);
        let alarm = if at.is_empty() { 0.0 } else { qualified.len() as f64 / at.len() as f64 };
        dates.push(DateRecord {
            date,
            alarm,
            qualified: qualified.len(),
            total: at.len(),
            positive,
            negative,
            sign,
            tc_samples,
            tc,
        });
    }

    let mut earliest_median = f64::INFINITY;
    let mut median_passed = None;
    for d in &dates {
        if let TcEstimate::Band(b) = d.tc {
            earliest_median = earliest_median.min(b.median);
        }
        if earliest_median <= d.date {
            median_passed = Some(d.date);
            break;
        }
    }

    AlarmReport {
        label: label.to_string(),
        band,
        dates,
        fits: scan.fits.len(),
        skipped_pairs: scan.skipped,
        failed_fits: scan.failed,
        median_passed,
    }
}

/// Scans `series` and aggregates the ensemble into an [`AlarmReport`].
pub fn report(series: &PriceSeries, config: &ScanConfig) -> Result<AlarmReport> {
    let scan = scan(series, config)?;
    Ok(summarize(series.label(), &scan, config.band))
}
