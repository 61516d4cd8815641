//! Closed-form models: the log-periodic power law, Gordon-Shapiro pricing,
//! growth trajectories and the doubling cascade with its finite-time
//! singularity.

use std::f64::consts::{LN_2, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the log-periodic power law
///
/// ```text
/// ln P(t) = A + B (t_c - t)^m + C (t_c - t)^m cos(ω ln(t_c - t) - φ)
/// ```
///
/// `C` and `φ` are stored together with the linear pair
/// `C1 = C cos φ`, `C2 = C sin φ`; the constructors keep both views in sync.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpplParams {
    pub t_c: f64,
    pub m: f64,
    pub omega: f64,
    pub phi: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl LpplParams {
    pub fn new(t_c: f64, m: f64, omega: f64, phi: f64, a: f64, b: f64, c: f64) -> Self {
        Self { t_c, m, omega, phi, a, b, c }
    }

    /// Builds parameters from the linear coefficients `(A, B, C1, C2)`.
    pub fn from_linear(t_c: f64, m: f64, omega: f64, a: f64, b: f64, c1: f64, c2: f64) -> Self {
        let (c, phi) = polar_from_linear(c1, c2);
        Self { t_c, m, omega, phi, a, b, c }
    }

    pub fn c1(&self) -> f64 {
        self.c * self.phi.cos()
    }

    pub fn c2(&self) -> f64 {
        self.c * self.phi.sin()
    }

    /// Linear coefficients `[A, B, C1, C2]` matching [`lppl_basis`].
    pub fn linear(&self) -> [f64; 4] {
        [self.a, self.b, self.c1(), self.c2()]
    }

    pub fn log_price(&self, t: f64) -> Result<f64> {
        lppl_log_price(self, t)
    }

    /// `λ = exp(2π/ω)`.
    pub fn scaling_ratio(&self) -> Result<f64> {
        scaling_ratio(self.omega)
    }

    /// Number of full log-periodic oscillations between `t1` and `t2`.
    pub fn oscillations(&self, t1: f64, t2: f64) -> f64 {
        oscillation_count(self.omega, self.t_c, t1, t2)
    }
}

/// `(C1, C2) -> (C, φ)` with `φ ∈ [0, 2π)`.
pub fn polar_from_linear(c1: f64, c2: f64) -> (f64, f64) {
    let c = c1.hypot(c2);
    let mut phi = c2.atan2(c1);
    if phi < 0.0 {
        phi += TAU;
    }
    if phi >= TAU {
        phi -= TAU;
    }
    (c, phi)
}

/// `ω ln((t_c - t1)/(t_c - t2)) / 2π`.
pub fn oscillation_count(omega: f64, t_c: f64, t1: f64, t2: f64) -> f64 {
    omega * ((t_c - t1) / (t_c - t2)).ln() / TAU
}

/// Evaluates the LPPL log-price at `t < t_c`.
pub fn lppl_log_price(p: &LpplParams, t: f64) -> Result<f64> {
    let dt = p.t_c - t;
    if !(dt > 0.0) {
        return Err(Error::BeyondCriticalTime { t, t_c: p.t_c });
    }
    let pow = dt.powf(p.m);
    Ok(p.a + p.b * pow + p.c * pow * (p.omega * dt.ln() - p.phi).cos())
}

/// Regressors `[1, x^m, x^m cos(ω ln x), x^m sin(ω ln x)]` with `x = t_c - t`.
pub fn lppl_basis(t_c: f64, m: f64, omega: f64, t: f64) -> Result<[f64; 4]> {
    let dt = t_c - t;
    if !(dt > 0.0) {
        return Err(Error::BeyondCriticalTime { t, t_c });
    }
    Ok(basis_at(dt, m, omega))
}

/// Basis at a known-positive distance `dt` to the critical time.
#[inline]
pub(crate) fn basis_at(dt: f64, m: f64, omega: f64) -> [f64; 4] {
    let ln = dt.ln();
    let pow = (m * ln).exp();
    let (s, c) = (omega * ln).sin_cos();
    [1.0, pow, pow * c, pow * s]
}

/// Ratio between successive oscillation periods, `exp(2π/ω)`.
pub fn scaling_ratio(omega: f64) -> Result<f64> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::InvalidParameter(format!("omega = {omega} must be positive")));
    }
    Ok((TAU / omega).exp())
}

/// Angular frequency giving scaling ratio `lambda > 1`.
pub fn omega_for_ratio(lambda: f64) -> Result<f64> {
    if !(lambda > 1.0) {
        return Err(Error::InvalidParameter(format!("scaling ratio {lambda} must exceed 1")));
    }
    Ok(TAU / lambda.ln())
}

/// Dividend-discount inputs: dividend `d`, total return `r`, dividend growth `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DividendModel {
    pub d: f64,
    pub r: f64,
    pub g: f64,
}

/// `P = D / (r - g)`.
pub fn gordon_shapiro_price(dm: &DividendModel) -> Result<f64> {
    if !(dm.d > 0.0) {
        return Err(Error::InvalidParameter(format!("dividend {} must be positive", dm.d)));
    }
    if !(dm.r > dm.g) {
        return Err(Error::NoFinitePrice { r: dm.r, g: dm.g });
    }
    Ok(dm.d / (dm.r - dm.g))
}

/// `r = D / P + g`.
pub fn gordon_shapiro_return(d: f64, price: f64, g: f64) -> Result<f64> {
    if !(price > 0.0) {
        return Err(Error::InvalidParameter(format!("price {price} must be positive")));
    }
    Ok(d / price + g)
}

/// One row of the doubling cascade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeState {
    pub time: f64,
    pub population: f64,
    pub rate: f64,
    pub doubling_time: f64,
}

/// Population whose growth rate doubles each time the population doubles.
///
/// Row `k` holds population `p0·2^k` growing at `r0·2^k` from the end of the
/// previous doubling interval.
pub fn cascade(p0: f64, r0: f64, steps: usize) -> Result<Vec<CascadeState>> {
    check_cascade(p0, r0)?;
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be at least 1".into()));
    }
    let mut rows = Vec::with_capacity(steps);
    let mut time = 0.0;
    for k in 0..steps {
        let factor = (k as f64).exp2();
        let rate = r0 * factor;
        let doubling_time = LN_2 / rate;
        rows.push(CascadeState { time, population: p0 * factor, rate, doubling_time });
        time += doubling_time;
    }
    Ok(rows)
}

/// Time at which the cascade completes infinitely many doublings, `2 ln 2 / r0`.
pub fn singular_time(r0: f64) -> Result<f64> {
    if !(r0 > 0.0) || !r0.is_finite() {
        return Err(Error::InvalidParameter(format!("rate {r0} must be positive")));
    }
    Ok(2.0 * LN_2 / r0)
}

/// Population of the cascade at continuous time `t`, before the singularity.
pub fn cascade_population(p0: f64, r0: f64, t: f64) -> Result<f64> {
    check_cascade(p0, r0)?;
    let t_s = singular_time(r0)?;
    if !(t < t_s) {
        return Err(Error::BeyondCriticalTime { t, t_c: t_s });
    }
    if t < 0.0 {
        return Ok(p0 * (r0 * t).exp());
    }
    // Interval k starts at T_s (1 - 2^-k); solve for the current one.
    let k = (-(1.0 - t / t_s).log2()).floor().max(0.0);
    let start = t_s * (1.0 - (-k).exp2());
    let rate = r0 * k.exp2();
    Ok(p0 * k.exp2() * (rate * (t - start)).exp())
}

fn check_cascade(p0: f64, r0: f64) -> Result<()> {
    if !(p0 > 0.0) {
        return Err(Error::InvalidParameter(format!("population {p0} must be positive")));
    }
    if !(r0 > 0.0) || !r0.is_finite() {
        return Err(Error::InvalidParameter(format!("rate {r0} must be positive")));
    }
    Ok(())
}

/// Growth trajectories used to contrast exponential, bounded and singular growth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GrowthSpec {
    /// `p0 exp(rate t)`.
    Exponential { rate: f64, p0: f64 },
    /// `K / (1 + ((K - p0)/p0) exp(-rate t))`.
    Logistic { rate: f64, capacity: f64, p0: f64 },
    /// `scale / (t_c - t)^alpha`.
    Hyperbolic { t_c: f64, alpha: f64, scale: f64 },
}

impl GrowthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            GrowthSpec::Exponential { rate, p0 } => {
                if !rate.is_finite() {
                    return bad(format!("exponential rate {rate} must be finite"));
                }
                if !(p0 > 0.0) {
                    return bad(format!("p0 {p0} must be positive"));
                }
            }
            GrowthSpec::Logistic { rate, capacity, p0 } => {
                if !rate.is_finite() {
                    return bad(format!("logistic rate {rate} must be finite"));
                }
                if !(capacity > p0 && p0 > 0.0) {
                    return bad(format!("need capacity > p0 > 0, got {capacity} and {p0}"));
                }
            }
            GrowthSpec::Hyperbolic { t_c, alpha, scale } => {
                if !t_c.is_finite() || !(alpha > 0.0) || !(scale > 0.0) {
                    return bad(format!(
                        "hyperbolic needs finite t_c, alpha > 0, scale > 0; got {t_c}, {alpha}, {scale}"
                    ));
                }
            }
        }
        Ok(())
    }

    /// Singular time of the trajectory, if it has one.
    pub fn critical_time(&self) -> Option<f64> {
        match *self {
            GrowthSpec::Hyperbolic { t_c, .. } => Some(t_c),
            _ => None,
        }
    }
}

pub fn growth_value(spec: &GrowthSpec, t: f64) -> Result<f64> {
    spec.validate()?;
    Ok(match *spec {
        GrowthSpec::Exponential { rate, p0 } => p0 * (rate * t).exp(),
        GrowthSpec::Logistic { rate, capacity, p0 } => capacity / (1.0 + ((capacity - p0) / p0) * (-rate * t).exp()),
        GrowthSpec::Hyperbolic { t_c, alpha, scale } => {
            let dt = t_c - t;
            if !(dt > 0.0) {
                return Err(Error::BeyondCriticalTime { t, t_c });
            }
            scale / dt.powf(alpha)
        }
    })
}

/// Exponential that starts at the hyperbolic value at `t = 0` and meets it
/// again at `t_match`, i.e. has the hyperbola's average log-growth over
/// `[0, t_match]`.
pub fn matched_exponential(hyperbolic: &GrowthSpec, t_match: f64) -> Result<GrowthSpec> {
    let GrowthSpec::Hyperbolic { .. } = hyperbolic else {
        return Err(Error::InvalidParameter("matching requires a hyperbolic trajectory".into()));
    };
    if !(t_match > 0.0) {
        return Err(Error::InvalidParameter(format!("match time {t_match} must be positive")));
    }
    let start = growth_value(hyperbolic, 0.0)?;
    let end = growth_value(hyperbolic, t_match)?;
    Ok(GrowthSpec::Exponential { rate: (end / start).ln() / t_match, p0: start })
}
