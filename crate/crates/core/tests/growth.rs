#![allow(clippy::approx_constant)]

use lppl_core::model::{cascade, growth_value, lppl_log_price, singular_time};
use lppl_core::{generate, Grid, GrowthSpec, LpplParams, Regime, SynthSpec};

#[test]
fn lppl_without_oscillation_accelerates_to_tc() {
    let p = LpplParams::new(100.0, 0.5, 6.0, 0.0, 5.0, -1.0, 0.0);
    let mut previous = f64::NEG_INFINITY;
    for i in 0..1000 {
        let t = i as f64 * 0.0999;
        let y = lppl_log_price(&p, t).unwrap();
        assert!(y > previous);
        previous = y;
    }
    let slope = |dt: f64| {
        let h = dt * 1e-3;
        (lppl_log_price(&p, 100.0 - dt).unwrap() - lppl_log_price(&p, 100.0 - dt - h).unwrap()) / h
    };
    let slopes: Vec<f64> = [1.0, 1e-2, 1e-4, 1e-6].iter().map(|&dt| slope(dt)).collect();
    assert!(slopes.windows(2).all(|w| w[1] > 5.0 * w[0]), "{slopes:?}");
    assert!(slopes[3] > 100.0);
    assert!(lppl_log_price(&p, 100.0).is_err());
}

#[test]
fn growth_regimes_bounds() {
    let logistic = GrowthSpec::Logistic { rate: 0.1, capacity: 50.0, p0: 1.0 };
    let exponential = GrowthSpec::Exponential { rate: 0.1, p0: 1.0 };
    let hyperbolic = GrowthSpec::Hyperbolic { t_c: 100.0, alpha: 1.0, scale: 1.0 };
    for i in 0..2000 {
        let t = i as f64 * 0.5;
        assert!(growth_value(&logistic, t).unwrap() <= 50.0);
    }
    assert!(growth_value(&exponential, 500.0).unwrap() > 1e20);
    for bound in [1e3, 1e6, 1e12] {
        let t = 100.0 - 0.5 / bound;
        assert!(growth_value(&hyperbolic, t).unwrap() > bound);
    }
    assert!(growth_value(&hyperbolic, 100.0).is_err());
}

#[test]
fn cascade_halves_and_converges() {
    let rows = cascade(2.0, 0.02, 40).unwrap();
    for w in rows.windows(2) {
        assert!((w[1].doubling_time * 2.0 - w[0].doubling_time).abs() < 1e-12);
        assert!((w[1].population - 2.0 * w[0].population).abs() < 1e-9 * w[1].population);
    }
    // row 10 starts after nine doublings: 34.657 (2 - 2^-8)
    let expected = std::f64::consts::LN_2 / 0.02 * (2.0 - 2f64.powi(-8));
    assert!((rows[9].time - expected).abs() < 1e-9);
    assert!((rows[9].time - 69.18).abs() < 0.01);
    let t_s = singular_time(0.02).unwrap();
    assert!(rows.iter().all(|r| r.time < t_s));
}

#[test]
fn exponential_regression_slope() {
    let rate = 0.004;
    let spec = SynthSpec {
        regime: Regime::Growth { spec: GrowthSpec::Exponential { rate, p0: 20.0 } },
        grid: Grid { start: 0.0, end: 499.0, step: 1.0 },
        noise_sigma: 0.02,
        seed: 12,
    };
    let s = generate(&spec).unwrap().series;
    let n = s.len() as f64;
    let (tm, ym) = (s.times().iter().sum::<f64>() / n, s.log_prices().iter().sum::<f64>() / n);
    let sxx: f64 = s.times().iter().map(|t| (t - tm).powi(2)).sum();
    let sxy: f64 = s.times().iter().zip(s.log_prices()).map(|(t, y)| (t - tm) * (y - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * tm;
    let resid: f64 = s.times().iter().zip(s.log_prices()).map(|(t, y)| (y - intercept - slope * t).powi(2)).sum();
    let se = (resid / (n - 2.0) / sxx).sqrt();
    assert!((slope - rate).abs() <= 3.0 * se, "slope {slope} se {se}");
}

#[test]
fn noise_standard_deviation() {
    let params = LpplParams::new(20_100.0, 0.5, 6.28, 1.0, 8.0, -1.0, 0.05);
    let sigma = 0.03;
    let spec = SynthSpec {
        regime: Regime::Lppl { params },
        grid: Grid { start: 0.0, end: 19_999.0, step: 1.0 },
        noise_sigma: sigma,
        seed: 77,
    };
    let s = generate(&spec).unwrap().series;
    let resid: Vec<f64> =
        s.times().iter().zip(s.log_prices()).map(|(t, y)| y - lppl_log_price(&params, *t).unwrap()).collect();
    let n = resid.len() as f64;
    let mean = resid.iter().sum::<f64>() / n;
    let sd = (resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(n >= 1e4);
    assert!((sd - sigma).abs() <= 0.05 * sigma, "sd {sd}");
}
