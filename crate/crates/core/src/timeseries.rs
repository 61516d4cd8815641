//! Price series ingestion, validation and windowing.
//!
//! Time is a real-valued axis in days. ISO-8601 calendar dates map to days
//! since 1970-01-01; raw numeric timestamps are taken as-is, which also
//! supports trading-day clocks.

use std::io::{Read, Write};

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, RowError};
use crate::numfmt::{fmt_sig, round_sig, SIGNIFICANT_DIGITS};

/// Default minimum number of observations in a fit window.
pub const DEFAULT_MIN_POINTS: usize = 30;

/// Ordered (time, price) observations with cached log-prices.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    label: String,
    times: Vec<f64>,
    prices: Vec<f64>,
    log_prices: Vec<f64>,
}

impl PriceSeries {
    /// Builds a series, checking that times strictly increase and prices are positive.
    pub fn new(label: impl Into<String>, times: Vec<f64>, prices: Vec<f64>) -> Result<Self> {
        if times.len() != prices.len() {
            return Err(Error::InvalidSeries(format!("{} times but {} prices", times.len(), prices.len())));
        }
        if times.len() < 2 {
            return Err(Error::InvalidSeries(format!("length {} < 2", times.len())));
        }
        if let Some(i) = times.iter().position(|t| !t.is_finite()) {
            return Err(Error::InvalidSeries(format!("non-finite time at index {i}")));
        }
        if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSeries(format!("times not strictly increasing at index {}", i + 1)));
        }
        if let Some(i) = prices.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::InvalidSeries(format!("price {} at index {i} is not strictly positive", prices[i])));
        }
        let log_prices = prices.iter().map(|p| p.ln()).collect();
        Ok(Self { label: label.into(), times, prices, log_prices })
    }

    /// Builds a series from log-prices, e.g. model output plus noise.
    pub fn from_log_prices(label: impl Into<String>, times: Vec<f64>, log_prices: Vec<f64>) -> Result<Self> {
        let prices = log_prices.iter().map(|y| y.exp()).collect();
        let mut series = Self::new(label, times, prices)?;
        // keep the exact log values rather than ln(exp(y))
        series.log_prices = log_prices;
        Ok(series)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn log_prices(&self) -> &[f64] {
        &self.log_prices
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn first_time(&self) -> f64 {
        self.times[0]
    }

    pub fn last_time(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Returns a copy with every price multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let prices = self.prices.iter().map(|p| p * factor).collect();
        Self::new(self.label.clone(), self.times.clone(), prices)
    }

    /// Returns a copy with every timestamp shifted by `delta`.
    pub fn shifted(&self, delta: f64) -> Result<Self> {
        let times = self.times.iter().map(|t| t + delta).collect();
        let mut out = Self::new(self.label.clone(), times, self.prices.clone())?;
        out.log_prices = self.log_prices.clone();
        Ok(out)
    }

    /// Window over all observations with `t1 <= time <= t2`, requiring at
    /// least [`DEFAULT_MIN_POINTS`] of them.
    pub fn slice(&self, t1: f64, t2: f64) -> Result<FitWindow> {
        self.slice_with_min(t1, t2, DEFAULT_MIN_POINTS)
    }

    pub fn slice_with_min(&self, t1: f64, t2: f64, min_points: usize) -> Result<FitWindow> {
        if !(t1 < t2) {
            return Err(Error::InvalidWindow(format!("t1 = {t1} must be before t2 = {t2}")));
        }
        if t2 < self.first_time() || t1 > self.last_time() {
            return Err(Error::InvalidWindow(format!(
                "[{t1}, {t2}] does not intersect the series span [{}, {}]",
                self.first_time(),
                self.last_time()
            )));
        }
        let start = self.times.partition_point(|&t| t < t1);
        let end = self.times.partition_point(|&t| t <= t2);
        let found = end - start;
        if found < min_points.max(2) {
            return Err(Error::WindowTooSmall { t1, t2, found, required: min_points.max(2) });
        }
        Ok(FitWindow { t1, t2, start, end })
    }

    /// Window spanning the whole series.
    pub fn full_window(&self) -> FitWindow {
        FitWindow { t1: self.first_time(), t2: self.last_time(), start: 0, end: self.len() }
    }

    pub fn window_times(&self, window: &FitWindow) -> &[f64] {
        &self.times[window.start..window.end]
    }

    pub fn window_log_prices(&self, window: &FitWindow) -> &[f64] {
        &self.log_prices[window.start..window.end]
    }
}

/// A time interval `[t1, t2]` resolved to the half-open index range `start..end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub t1: f64,
    pub t2: f64,
    pub start: usize,
    pub end: usize,
}

impl FitWindow {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    /// Length of the window in time units, `t2 - t1`.
    pub fn duration(&self) -> f64 {
        self.t2 - self.t1
    }
}

/// Column mapping and leniency for [`load_csv`].
#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Time column. `None` accepts `date` or, failing that, `time`.
    pub time_column: Option<String>,
    pub price_column: String,
    pub label: String,
    /// Fail on any rejected row instead of skipping it.
    pub strict: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self { time_column: None, price_column: "price".into(), label: String::new(), strict: false }
    }
}

/// A loaded series along with the rows that were skipped.
#[derive(Debug, Clone)]
pub struct CsvLoad {
    pub series: PriceSeries,
    pub rejected: Vec<RowError>,
}

/// Parses a timestamp: a raw real number of days, an ISO-8601 date, or an
/// ISO-8601 date-time (fractional days).
pub fn parse_time(field: &str) -> Option<f64> {
    let field = field.trim();
    if let Ok(x) = field.parse::<f64>() {
        return x.is_finite().then_some(x);
    }
    let epoch = NaiveDate::from_ymd_opt(1970, 1, 1)?.and_hms_opt(0, 0, 0)?;
    if let Ok(d) = NaiveDate::parse_from_str(field, "%Y-%m-%d") {
        return Some((d - epoch.date()).num_days() as f64);
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(field, fmt) {
            let secs = (dt - epoch).num_milliseconds() as f64 / 1000.0;
            return Some(secs / 86_400.0);
        }
    }
    None
}

/// Reads a price series from CSV text with a header row.
///
/// Rows with an unparseable time, or a price that is unparseable or not
/// strictly positive, are skipped and reported by line number. The result is
/// sorted by time; duplicate timestamps with equal prices collapse to one row.
pub fn load_csv<R: Read>(source: R, options: &LoadOptions) -> Result<CsvLoad> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(source);
    let headers = reader.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::EmptyInput);
    }
    let find = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let time_idx = match &options.time_column {
        Some(name) => find(name).ok_or_else(|| Error::MissingColumn(name.clone()))?,
        None => find("date").or_else(|| find("time")).ok_or_else(|| Error::MissingColumn("date".into()))?,
    };
    let price_idx = find(&options.price_column).ok_or_else(|| Error::MissingColumn(options.price_column.clone()))?;

    let mut rows: Vec<(f64, f64, usize)> = Vec::new();
    let mut rejected = Vec::new();
    let mut seen_any = false;
    for record in reader.records() {
        let record = record?;
        seen_any = true;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let raw_time = record.get(time_idx).unwrap_or("");
        let raw_price = record.get(price_idx).unwrap_or("");
        let Some(time) = parse_time(raw_time) else {
            rejected.push(RowError { line, message: format!("unparseable time `{raw_time}`") });
            continue;
        };
        match raw_price.parse::<f64>() {
            Ok(p) if p.is_finite() && p > 0.0 => rows.push((time, p, line)),
            Ok(p) => rejected.push(RowError { line, message: format!("price {p} is not strictly positive") }),
            Err(_) => rejected.push(RowError { line, message: format!("unparseable price `{raw_price}`") }),
        }
    }
    if !seen_any {
        return Err(Error::EmptyInput);
    }
    if options.strict && !rejected.is_empty() {
        return Err(Error::InvalidRows(rejected));
    }

    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
    let mut times = Vec::with_capacity(rows.len());
    let mut prices = Vec::with_capacity(rows.len());
    for (t, p, _) in rows {
        if let Some(&last) = times.last() {
            if last == t {
                let prev = *prices.last().unwrap();
                if prev != p {
                    return Err(Error::ConflictingDuplicate { time: t, first: prev, second: p });
                }
                continue;
            }
        }
        times.push(t);
        prices.push(p);
    }
    if times.len() < 2 {
        return Err(Error::TooFewRows { valid: times.len(), rejected });
    }
    let series = PriceSeries::new(options.label.clone(), times, prices)?;
    Ok(CsvLoad { series, rejected })
}

/// Writes `time,price,log_price` rows with 12 significant digits.
///
/// `log_price` is the logarithm of the price as written, so loading the file
/// and saving it again reproduces it byte for byte.
pub fn save_csv<W: Write>(series: &PriceSeries, sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(["time", "price", "log_price"])?;
    for i in 0..series.len() {
        let price = round_sig(series.prices[i], SIGNIFICANT_DIGITS);
        writer.write_record([fmt_sig(series.times[i]), fmt_sig(price), fmt_sig(price.ln())])?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<CsvLoad> {
        load_csv(text.as_bytes(), &LoadOptions::default())
    }

    fn daily(n: usize) -> PriceSeries {
        let times = (0..n).map(|i| i as f64).collect();
        let prices = (0..n).map(|i| 100.0 + i as f64).collect();
        PriceSeries::new("daily", times, prices).unwrap()
    }

    #[test]
    fn two_rows() {
        let out = load("date,price\n2020-01-01,100\n2020-01-02,101\n").unwrap();
        let s = out.series;
        assert_eq!(s.len(), 2);
        assert_eq!(s.log_prices(), &[100f64.ln(), 101f64.ln()]);
        assert_eq!(s.times()[1] - s.times()[0], 1.0);
        assert_eq!(s.times()[0], 18262.0);
    }

    #[test]
    fn negative_price_row_reported() {
        let out = load("date,price\n2020-01-01,100\n2020-01-02,-5\n2020-01-03,102\n").unwrap();
        assert_eq!(out.series.len(), 2);
        assert_eq!(out.rejected.len(), 1);
        assert_eq!(out.rejected[0].line, 3);

        let strict = LoadOptions { strict: true, ..LoadOptions::default() };
        let err = load_csv("date,price\n1,100\n2,-5\n3,1\n".as_bytes(), &strict).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn shuffled_equals_sorted() {
        let sorted = load("date,price\n2020-01-01,1\n2020-01-02,2\n2020-01-03,3\n").unwrap();
        let shuffled = load("date,price\n2020-01-03,3\n2020-01-01,1\n2020-01-02,2\n").unwrap();
        assert_eq!(sorted.series, shuffled.series);
    }

    #[test]
    fn error_cases() {
        assert!(matches!(load(""), Err(Error::EmptyInput)));
        assert!(matches!(load("date,price\n"), Err(Error::EmptyInput)));
        assert!(matches!(load("date,price\n1,2\n"), Err(Error::TooFewRows { valid: 1, .. })));
        assert!(matches!(load("when,price\n1,2\n2,3\n"), Err(Error::MissingColumn(_))));
        assert!(matches!(load("date,price\n1,2\n1,3\n2,4\n"), Err(Error::ConflictingDuplicate { .. })));
        // equal duplicates collapse
        assert_eq!(load("date,price\n1,2\n1,2\n2,4\n").unwrap().series.len(), 2);
    }

    #[test]
    fn custom_columns_and_datetimes() {
        let opts =
            LoadOptions { time_column: Some("ts".into()), price_column: "close".into(), ..LoadOptions::default() };
        let text = "ts,close\n1970-01-02T12:00:00,5\n1970-01-03,6\n";
        let s = load_csv(text.as_bytes(), &opts).unwrap().series;
        assert_eq!(s.times(), &[1.5, 2.0]);
    }

    #[test]
    fn constructor_invariants() {
        assert!(PriceSeries::new("", vec![0.0], vec![1.0]).is_err());
        assert!(PriceSeries::new("", vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(PriceSeries::new("", vec![0.0, 1.0], vec![1.0, 0.0]).is_err());
        assert!(PriceSeries::new("", vec![1.0, 0.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn slicing() {
        let s = daily(100);
        let full = s.slice(0.0, 99.0).unwrap();
        assert_eq!(full, s.full_window());
        assert_eq!(s.slice(25.0, 75.0).unwrap().len(), 51);
        assert!(matches!(s.slice(50.0 - 1e-9, 50.0), Err(Error::WindowTooSmall { found: 1, .. })));
        assert!(s.slice(5.0, 5.0).is_err());
        assert!(s.slice(200.0, 300.0).is_err());
    }

    #[test]
    fn save_format() {
        let s = PriceSeries::new("", vec![0.5, 1.0], vec![100.0, 2.0]).unwrap();
        let mut buf = Vec::new();
        save_csv(&s, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "time,price,log_price\n0.5,100,4.60517018599\n1,2,0.69314718056\n");
    }
}
