//! LPPL calibration on a single window.
//!
//! The four linear coefficients `(A, B, C1, C2)` are solved exactly for any
//! `(t_c, m, ω)`, so the nonlinear search runs over those three parameters
//! only: Latin-hypercube starts, each refined by a bounded simplex descent.

mod linear;
pub mod simplex;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use linear::Workspace;
pub use linear::{solve_linear, LinearFit};
use simplex::{SimplexOptions, SimplexOutcome};

use crate::error::{Error, Result, StartDiagnostic};
use crate::model::{oscillation_count, LpplParams};
use crate::timeseries::{FitWindow, PriceSeries};

/// Qualification thresholds; the ranges also bound the search box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub m_min: f64,
    pub m_max: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    /// Largest `t_c - t2`, as a fraction of the window length.
    pub tc_horizon: f64,
    pub max_rmse: Option<f64>,
    pub min_oscillations: f64,
    /// Smallest ratio of the log-periodic amplitude to the residual rmse;
    /// `0` disables the check.
    pub min_oscillation_snr: f64,
    /// Permit `t_c` before the window end (post-mortem fits). Observations at
    /// or after `t_c` are then left out of the regression.
    pub allow_in_sample_tc: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            m_min: 0.01,
            m_max: 0.99,
            omega_min: 2.0,
            omega_max: 15.0,
            tc_horizon: 0.5,
            max_rmse: None,
            min_oscillations: 1.5,
            min_oscillation_snr: 3.0,
            allow_in_sample_tc: false,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.m_min < self.m_max) {
            return bad(format!("empty m range ({}, {})", self.m_min, self.m_max));
        }
        if !(self.omega_min < self.omega_max) || !(self.omega_min > 0.0) {
            return bad(format!("invalid omega range ({}, {})", self.omega_min, self.omega_max));
        }
        if !(self.tc_horizon > 0.0) || !self.tc_horizon.is_finite() {
            return bad(format!("tc_horizon {} must be positive", self.tc_horizon));
        }
        if let Some(r) = self.max_rmse {
            if !(r > 0.0) {
                return bad(format!("max_rmse {r} must be positive"));
            }
        }
        if !self.min_oscillations.is_finite() {
            return bad("min_oscillations must be finite".into());
        }
        if !(self.min_oscillation_snr >= 0.0) || !self.min_oscillation_snr.is_finite() {
            return bad(format!("min_oscillation_snr {} must be >= 0", self.min_oscillation_snr));
        }
        Ok(())
    }
}

/// Multi-start search settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub starts: usize,
    /// Relative objective tolerance of each simplex descent.
    pub tolerance: f64,
    pub max_evaluations: usize,
    /// Extra descents restarted from the best point to escape premature collapse.
    pub polish_rounds: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { starts: 20, tolerance: 1e-8, max_evaluations: 2000, polish_rounds: 2 }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.starts == 0 {
            return Err(Error::InvalidParameter("at least one start is required".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BubbleSign {
    PositiveBubble,
    NegativeBubble,
    None,
}

impl BubbleSign {
    pub fn as_str(&self) -> &'static str {
        match self {
            BubbleSign::PositiveBubble => "positive_bubble",
            BubbleSign::NegativeBubble => "negative_bubble",
            BubbleSign::None => "none",
        }
    }
}

/// Outcome of one qualification condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub qualified: bool,
    pub checks: Vec<Check>,
}

impl Verdict {
    /// Reasons of the failed checks.
    pub fn reasons(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.reason.as_str()).collect()
    }
}

/// A calibrated window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: LpplParams,
    pub window: FitWindow,
    pub sse: f64,
    pub rmse: f64,
    pub n_points: usize,
    /// Time of the last observation used in the regression.
    pub last_fitted_time: f64,
    pub qualified: bool,
    pub sign: BubbleSign,
    pub checks: Vec<Check>,
    pub starts_converged: usize,
    pub evaluations: usize,
}

impl FitResult {
    pub fn oscillations(&self) -> f64 {
        let end = if self.params.t_c > self.window.t2 { self.window.t2 } else { self.last_fitted_time };
        oscillation_count(self.params.omega, self.params.t_c, self.window.t1, end)
    }

    pub fn reasons(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.reason.as_str()).collect()
    }

    /// Root-mean-square of the oscillation envelope `|C| (t_c - t)^m` over
    /// the window, with `t` treated as uniform on `[t1, end]`.
    pub fn oscillation_amplitude(&self) -> f64 {
        let p = &self.params;
        let end = if p.t_c > self.window.t2 { self.window.t2 } else { self.last_fitted_time };
        let near = p.t_c - end;
        let far = p.t_c - self.window.t1;
        let k = 2.0 * p.m + 1.0;
        let mean_sq = if far > near { (far.powf(k) - near.powf(k)) / (k * (far - near)) } else { far.powf(2.0 * p.m) };
        p.c.abs() * mean_sq.sqrt()
    }

    /// Oscillation amplitude in units of the residual rmse.
    pub fn oscillation_snr(&self) -> f64 {
        let amp = self.oscillation_amplitude();
        if self.rmse > 0.0 {
            amp / self.rmse
        } else if amp > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }
}

/// Positive bubble for `B < 0`, negative for `B > 0`.
pub fn classify_sign(fit: &FitResult) -> BubbleSign {
    sign_of(fit.params.b)
}

fn sign_of(b: f64) -> BubbleSign {
    if b < 0.0 {
        BubbleSign::PositiveBubble
    } else if b > 0.0 {
        BubbleSign::NegativeBubble
    } else {
        BubbleSign::None
    }
}

/// Evaluates every filter condition against `fit`.
pub fn qualify(fit: &FitResult, filters: &FilterConfig) -> Verdict {
    let p = &fit.params;
    let length = fit.window.duration();
    let mut checks = Vec::with_capacity(5);

    let in_range = |v: f64, lo: f64, hi: f64| v >= lo && v <= hi;
    checks.push(Check {
        name: "m_range".into(),
        passed: in_range(p.m, filters.m_min, filters.m_max),
        value: p.m,
        reason: "m out of range".into(),
    });
    checks.push(Check {
        name: "omega_range".into(),
        passed: in_range(p.omega, filters.omega_min, filters.omega_max),
        value: p.omega,
        reason: "omega out of range".into(),
    });
    let lead = (p.t_c - fit.window.t2) / length;
    let lead_ok = if filters.allow_in_sample_tc {
        lead.abs() <= filters.tc_horizon && p.t_c > fit.window.t1
    } else {
        lead > 0.0 && lead <= filters.tc_horizon
    };
    checks.push(Check {
        name: "tc_horizon".into(),
        passed: lead_ok,
        value: lead,
        reason: "t_c outside horizon".into(),
    });
    let oscillations = fit.oscillations();
    checks.push(Check {
        name: "oscillations".into(),
        passed: oscillations >= filters.min_oscillations,
        value: oscillations,
        reason: "too few oscillations".into(),
    });
    if filters.min_oscillation_snr > 0.0 {
        let snr = fit.oscillation_snr();
        checks.push(Check {
            name: "oscillation_snr".into(),
            passed: snr >= filters.min_oscillation_snr,
            value: snr,
            reason: "oscillation amplitude within noise".into(),
        });
    }
    if let Some(max_rmse) = filters.max_rmse {
        checks.push(Check {
            name: "max_rmse".into(),
            passed: fit.rmse <= max_rmse,
            value: fit.rmse,
            reason: "rmse above ceiling".into(),
        });
    }
    Verdict { qualified: checks.iter().all(|c| c.passed), checks }
}

/// Maps the unit box onto `(t_c - t2, m, ω)`.
#[derive(Debug, Clone, Copy)]
struct SearchBox {
    lead: (f64, f64),
    m: (f64, f64),
    omega: (f64, f64),
}

impl SearchBox {
    fn new(window: &FitWindow, filters: &FilterConfig) -> Self {
        let length = window.duration();
        let hi = filters.tc_horizon * length;
        // t_c strictly after t2
        let lo = if filters.allow_in_sample_tc { -hi } else { 1e-3 * hi };
        Self { lead: (lo, hi), m: (filters.m_min, filters.m_max), omega: (filters.omega_min, filters.omega_max) }
    }

    fn point(&self, u: &[f64; 3]) -> (f64, f64, f64) {
        let lerp = |(lo, hi): (f64, f64), s: f64| lo + s * (hi - lo);
        (lerp(self.lead, u[0]), lerp(self.m, u[1]), lerp(self.omega, u[2]))
    }
}

/// Objective over one window, reusing its buffers between evaluations.
struct Objective<'a> {
    /// `t2 - t_i`
    offsets: Vec<f64>,
    ys: &'a [f64],
    min_points: usize,
    distances: Vec<f64>,
    workspace: Workspace,
}

impl<'a> Objective<'a> {
    fn new(times: &[f64], ys: &'a [f64], t2: f64, min_points: usize) -> Self {
        Self {
            offsets: times.iter().map(|t| t2 - t).collect(),
            ys,
            min_points,
            distances: Vec::with_capacity(times.len()),
            workspace: Workspace::default(),
        }
    }

    /// Solves at `t_c = t2 + lead`, dropping observations at or after `t_c`.
    fn solve(&mut self, lead: f64, m: f64, omega: f64) -> Result<(LinearFit, usize)> {
        self.distances.clear();
        // offsets decrease, so the kept points are a prefix
        self.distances.extend(self.offsets.iter().map(|off| off + lead).take_while(|dt| *dt > 0.0));
        let used = self.distances.len();
        if used < self.min_points.max(5) {
            return Err(Error::Numerical(format!("only {used} observations before t_c")));
        }
        let fit = self.workspace.solve(&self.distances, &self.ys[..used], m, omega)?;
        Ok((fit, used))
    }

    fn sse(&mut self, lead: f64, m: f64, omega: f64) -> f64 {
        self.solve(lead, m, omega).map(|(f, _)| f.sse).unwrap_or(f64::INFINITY)
    }
}

/// Latin-hypercube points in the unit cube, reproducible from `seed`.
pub fn latin_hypercube<const N: usize>(count: usize, seed: u64) -> Vec<[f64; N]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = vec![[0.0; N]; count];
    for dim in 0..N {
        let mut strata: Vec<usize> = (0..count).collect();
        strata.shuffle(&mut rng);
        for (point, stratum) in points.iter_mut().zip(strata) {
            point[dim] = (stratum as f64 + rng.random::<f64>()) / count as f64;
        }
    }
    points
}

struct StartOutcome {
    x: [f64; 3],
    sse: f64,
    evaluations: usize,
    converged: bool,
}

fn run_start(
    times: &[f64],
    ys: &[f64],
    t2: f64,
    min_points: usize,
    bounds: &SearchBox,
    start: [f64; 3],
    search: &SearchConfig,
) -> StartOutcome {
    let mut objective = Objective::new(times, ys, t2, min_points);
    let mut f = |u: &[f64; 3]| {
        let (lead, m, omega) = bounds.point(u);
        objective.sse(lead, m, omega)
    };
    let opts = SimplexOptions {
        f_tolerance: search.tolerance,
        max_evaluations: search.max_evaluations,
        ..SimplexOptions::default()
    };
    let mut out: SimplexOutcome<3> = simplex::minimize(&mut f, start, &opts);
    let mut evaluations = out.evaluations;
    for _ in 0..search.polish_rounds {
        if !out.converged || !out.f.is_finite() {
            break;
        }
        let again = simplex::minimize(&mut f, out.x, &SimplexOptions { initial_step: 0.02, ..opts });
        evaluations += again.evaluations;
        let improved = again.f < out.f * (1.0 - search.tolerance);
        if again.f <= out.f {
            out = SimplexOutcome { evaluations: out.evaluations, ..again };
        }
        if !improved {
            break;
        }
    }
    StartOutcome { x: out.x, sse: out.f, evaluations, converged: out.converged && out.f.is_finite() }
}

/// Calibrates the LPPL model on `window`.
///
/// The result is a deterministic function of the inputs and `seed`; starts
/// run in parallel and the best converged one wins, ties going to the lowest
/// start index.
pub fn fit_window(
    series: &PriceSeries,
    window: &FitWindow,
    search: &SearchConfig,
    filters: &FilterConfig,
    seed: u64,
) -> Result<FitResult> {
    search.validate()?;
    filters.validate()?;
    if window.end > series.len() || window.len() < 5 || !(window.t1 < window.t2) {
        return Err(Error::InvalidWindow(format!("{window:?} does not fit the series")));
    }
    let times = series.window_times(window);
    let ys = series.window_log_prices(window);
    let bounds = SearchBox::new(window, filters);
    // in-sample fits still need enough points before t_c
    let min_points = if filters.allow_in_sample_tc { (window.len() / 2).max(5) } else { 5 };
    let t2 = window.t2;

    let starts = latin_hypercube::<3>(search.starts, seed);
    let outcomes: Vec<StartOutcome> =
        starts.par_iter().map(|&start| run_start(times, ys, t2, min_points, &bounds, start, search)).collect();

    let mut best: Option<usize> = None;
    for (i, o) in outcomes.iter().enumerate() {
        if !o.converged {
            continue;
        }
        if best.is_none_or(|b| o.sse < outcomes[b].sse) {
            best = Some(i);
        }
    }
    let Some(best) = best else {
        let diagnostics = outcomes
            .iter()
            .enumerate()
            .map(|(i, o)| StartDiagnostic {
                start: i,
                evaluations: o.evaluations,
                best_sse: o.sse,
                status: if o.sse.is_finite() { "budget exhausted" } else { "numerical failure" }.into(),
            })
            .collect();
        return Err(Error::NoConvergence(diagnostics));
    };

    let (lead, m, omega) = bounds.point(&outcomes[best].x);
    let mut objective = Objective::new(times, ys, t2, min_points);
    let (linear, used) = objective.solve(lead, m, omega)?;
    let t_c = t2 + lead;
    let params = LpplParams::from_linear(t_c, m, omega, linear.a, linear.b, linear.c1, linear.c2);
    let mut fit = FitResult {
        params,
        window: *window,
        sse: linear.sse,
        rmse: (linear.sse / used as f64).sqrt(),
        n_points: used,
        last_fitted_time: times[used - 1],
        qualified: false,
        sign: sign_of(linear.b),
        checks: Vec::new(),
        starts_converged: outcomes.iter().filter(|o| o.converged).count(),
        evaluations: outcomes.iter().map(|o| o.evaluations).sum(),
    };
    let verdict = qualify(&fit, filters);
    fit.qualified = verdict.qualified;
    fit.checks = verdict.checks;
    Ok(fit)
}
