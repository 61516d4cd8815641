use std::f64::consts::{PI, TAU};

use proptest::prelude::*;

use lppl_core::model::{gordon_shapiro_price, gordon_shapiro_return, lppl_log_price, polar_from_linear, scaling_ratio};
use lppl_core::scanner::nearest_rank;
use lppl_core::{load_csv, save_csv, DividendModel, LoadOptions, LpplParams, PriceSeries};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

proptest! {
    #[test]
    fn phase_symmetries(
        dt in 0.01f64..300.0, m in 0.01f64..0.99, omega in 2.0f64..15.0, phi in 0.0f64..TAU,
        a in -10.0f64..10.0, b in -2.0f64..2.0, c in 0.0f64..0.5,
    ) {
        let t_c = 500.0;
        let t = t_c - dt;
        let y = lppl_log_price(&LpplParams::new(t_c, m, omega, phi, a, b, c), t).unwrap();
        let flipped = lppl_log_price(&LpplParams::new(t_c, m, omega, phi + PI, a, b, -c), t).unwrap();
        let wrapped = lppl_log_price(&LpplParams::new(t_c, m, omega, phi + TAU, a, b, c), t).unwrap();
        prop_assert!(close(y, flipped, 1e-12), "{y} {flipped}");
        prop_assert!(close(y, wrapped, 1e-12), "{y} {wrapped}");
    }

    #[test]
    fn polar_round_trip(c in 0.0f64..10.0, phi in 0.0f64..TAU) {
        let p = LpplParams::new(1.0, 0.5, 6.0, phi, 0.0, 0.0, c);
        let (c2, phi2) = polar_from_linear(p.c1(), p.c2());
        prop_assert!(close(c, c2, 1e-12));
        prop_assert!((0.0..TAU).contains(&phi2));
        if c > 1e-6 {
            let d = (phi - phi2).rem_euclid(TAU);
            prop_assert!(d < 1e-9 || TAU - d < 1e-9, "{phi} {phi2}");
        }
    }

    #[test]
    fn gordon_shapiro_round_trip(d in 0.01f64..1000.0, g in -0.05f64..0.1, spread in 1e-3f64..0.2) {
        let r = g + spread;
        let p = gordon_shapiro_price(&DividendModel { d, r, g }).unwrap();
        prop_assert!(close(gordon_shapiro_return(d, p, g).unwrap(), r, 1e-12));
    }

    #[test]
    fn scaling_ratio_exceeds_one(omega in 0.01f64..50.0) {
        let lambda = scaling_ratio(omega).unwrap();
        prop_assert!(lambda.is_finite() && lambda > 1.0);
    }

    #[test]
    fn csv_round_trip_is_a_fixed_point(
        steps in prop::collection::vec(0.01f64..10.0, 2..40),
        prices in prop::collection::vec(1e-3f64..1e6, 40),
    ) {
        let mut t = 0.0;
        let times: Vec<f64> = steps.iter().map(|s| { t += s; t }).collect();
        let s = PriceSeries::new("p", times.clone(), prices[..times.len()].to_vec()).unwrap();
        let mut first = Vec::new();
        save_csv(&s, &mut first).unwrap();
        let options = LoadOptions { strict: true, ..LoadOptions::default() };
        let loaded = load_csv(first.as_slice(), &options).unwrap().series;
        let mut second = Vec::new();
        save_csv(&loaded, &mut second).unwrap();
        prop_assert_eq!(&first, &second);
        let again = load_csv(second.as_slice(), &options).unwrap().series;
        prop_assert_eq!(loaded.times(), again.times());
        prop_assert_eq!(loaded.prices(), again.prices());
    }

    #[test]
    fn slices_are_contiguous(len in 30usize..200, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let times: Vec<f64> = (0..len).map(|i| i as f64 * 1.5).collect();
        let s = PriceSeries::new("s", times.clone(), vec![10.0; len]).unwrap();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (t1, t2) = (lo * times[len - 1], hi * times[len - 1]);
        let expected: Vec<f64> = times.iter().copied().filter(|t| *t >= t1 && *t <= t2).collect();
        match s.slice_with_min(t1, t2, 2) {
            Ok(w) => {
                prop_assert_eq!(s.window_times(&w), expected.as_slice());
                prop_assert_eq!(w.len(), w.end - w.start);
            }
            Err(_) => prop_assert!(expected.len() < 2 || t1 >= t2),
        }
        let full = s.slice(times[0], times[len - 1]).unwrap();
        prop_assert_eq!(full, s.full_window());
    }

    #[test]
    fn nearest_rank_is_a_monotone_sample(
        mut xs in prop::collection::vec(-1e3f64..1e3, 1..50), p in 0.0f64..1.0, q in 0.0f64..1.0,
    ) {
        xs.sort_by(f64::total_cmp);
        let (lo, hi) = if p < q { (p, q) } else { (q, p) };
        let a = nearest_rank(&xs, lo);
        let b = nearest_rank(&xs, hi);
        prop_assert!(xs.contains(&a) && xs.contains(&b));
        prop_assert!(a <= b);
    }
}
