//! Seeded synthetic price series for every growth regime.
//!
//! Noise is i.i.d. Gaussian on log-price, matching the residual used in
//! calibration.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{cascade_population, growth_value, lppl_log_price, GrowthSpec, LpplParams};
use crate::timeseries::PriceSeries;

/// Deterministic model generating the log-price path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum Regime {
    Lppl {
        params: LpplParams,
    },
    Growth {
        spec: GrowthSpec,
    },
    /// Doubling cascade whose rate doubles with each population doubling.
    Cascade {
        p0: f64,
        r0: f64,
    },
}

impl Regime {
    /// Singular time, if the regime has one.
    pub fn critical_time(&self) -> Option<f64> {
        match self {
            Regime::Lppl { params } => Some(params.t_c),
            Regime::Growth { spec } => spec.critical_time(),
            Regime::Cascade { r0, .. } => crate::model::singular_time(*r0).ok(),
        }
    }

    /// Noise-free log-value at `t`.
    pub fn log_value(&self, t: f64) -> Result<f64> {
        match self {
            Regime::Lppl { params } => lppl_log_price(params, t),
            Regime::Growth { spec } => growth_value(spec, t).map(f64::ln),
            Regime::Cascade { p0, r0 } => cascade_population(*p0, *r0, t).map(f64::ln),
        }
    }
}

/// Regular time grid `start, start + step, ...` up to and including `end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.end - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start + i as f64 * self.step).collect()
    }
}

/// Full description of a synthetic series; doubles as its ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    #[serde(flatten)]
    pub regime: Regime,
    pub grid: Grid,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if !(g.step > 0.0) || !g.step.is_finite() {
            return Err(Error::InvalidParameter(format!("grid step {} must be positive", g.step)));
        }
        if !(g.end > g.start) {
            return Err(Error::InvalidParameter(format!("grid end {} must exceed start {}", g.end, g.start)));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!("noise_sigma {} must be >= 0", self.noise_sigma)));
        }
        if let Some(t_c) = self.regime.critical_time() {
            if !(g.end < t_c) {
                return Err(Error::BeyondCriticalTime { t: g.end, t_c });
            }
        }
        if let Regime::Growth { spec } = &self.regime {
            spec.validate()?;
        }
        Ok(())
    }
}

/// A generated series with the specification that produced it.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub series: PriceSeries,
    pub truth: SynthSpec,
}

pub fn generate(spec: &SynthSpec) -> Result<Synthetic> {
    spec.validate()?;
    let times = spec.grid.points();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::InvalidParameter(format!("noise: {e}")))?;
    let mut log_prices = Vec::with_capacity(times.len());
    for &t in &times {
        let clean = spec.regime.log_value(t)?;
        let eps = if spec.noise_sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
        log_prices.push(clean + eps);
    }
    let label = match spec.regime {
        Regime::Lppl { .. } => "synthetic-lppl",
        Regime::Growth { spec: GrowthSpec::Exponential { .. } } => "synthetic-exponential",
        Regime::Growth { spec: GrowthSpec::Logistic { .. } } => "synthetic-logistic",
        Regime::Growth { spec: GrowthSpec::Hyperbolic { .. } } => "synthetic-hyperbolic",
        Regime::Cascade { .. } => "synthetic-cascade",
    };
    let series = PriceSeries::from_log_prices(label, times, log_prices)?;
    Ok(Synthetic { series, truth: *spec })
}
