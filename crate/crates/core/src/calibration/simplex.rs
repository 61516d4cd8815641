//! Nelder-Mead simplex descent on the unit box `[0, 1]^N`.
//!
//! Trial points are clamped into the box, so the search never evaluates the
//! objective outside its bounds.

/// Stopping rules for one descent.
#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Relative spread of objective values across the simplex.
    pub f_tolerance: f64,
    /// Largest vertex distance from the best vertex, in box units.
    pub x_tolerance: f64,
    pub max_evaluations: usize,
    /// Edge length of the initial simplex, in box units.
    pub initial_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { f_tolerance: 1e-8, x_tolerance: 1e-10, max_evaluations: 2000, initial_step: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOutcome<const N: usize> {
    pub x: [f64; N],
    pub f: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimises `f` from `start`. Non-finite objective values count as `+∞`.
pub fn minimize<const N: usize, F>(mut f: F, start: [f64; N], opts: &SimplexOptions) -> SimplexOutcome<N>
where
    F: FnMut(&[f64; N]) -> f64,
{
    let evaluations = std::cell::Cell::new(0usize);
    let mut eval = |x: &[f64; N]| {
        evaluations.set(evaluations.get() + 1);
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let start = clamp(start);
    let mut simplex: Vec<([f64; N], f64)> = Vec::with_capacity(N + 1);
    simplex.push((start, eval(&start)));
    for i in 0..N {
        let mut x = start;
        x[i] = if x[i] + opts.initial_step <= 1.0 { x[i] + opts.initial_step } else { x[i] - opts.initial_step };
        simplex.push((x, eval(&x)));
    }

    let mut converged = false;
    loop {
        // stable sort keeps earlier vertices first among ties
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[N].1;
        if best.is_finite() {
            let spread = worst - best;
            let scale = best.abs().max(worst.abs());
            let f_small = spread <= opts.f_tolerance * scale || spread <= f64::MIN_POSITIVE;
            let x_small = simplex[1..]
                .iter()
                .all(|(x, _)| x.iter().zip(&simplex[0].0).all(|(a, b)| (a - b).abs() <= opts.x_tolerance));
            if f_small || x_small {
                converged = true;
                break;
            }
        }
        if evaluations.get() >= opts.max_evaluations {
            break;
        }

        let mut centroid = [0.0; N];
        for (x, _) in &simplex[..N] {
            for k in 0..N {
                centroid[k] += x[k] / N as f64;
            }
        }
        let (worst_x, worst_f) = simplex[N];
        let toward = |t: f64| clamp(std::array::from_fn(|k| centroid[k] + t * (worst_x[k] - centroid[k])));

        let reflected = toward(-1.0);
        let fr = eval(&reflected);
        if fr < simplex[0].1 {
            let expanded = toward(-2.0);
            let fe = eval(&expanded);
            simplex[N] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr < simplex[N - 1].1 {
            simplex[N] = (reflected, fr);
            continue;
        }
        let (contracted, fc) = if fr < worst_f {
            let x = toward(-0.5);
            (x, eval(&x))
        } else {
            let x = toward(0.5);
            (x, eval(&x))
        };
        if fc < worst_f.min(fr) {
            simplex[N] = (contracted, fc);
            continue;
        }
        let anchor = simplex[0].0;
        for vertex in simplex.iter_mut().skip(1) {
            let x = std::array::from_fn(|k| anchor[k] + 0.5 * (vertex.0[k] - anchor[k]));
            *vertex = (x, eval(&x));
        }
    }

    let (x, f) = simplex[0];
    SimplexOutcome { x, f, evaluations: evaluations.get(), converged }
}

fn clamp<const N: usize>(x: [f64; N]) -> [f64; N] {
    x.map(|v| v.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_quadratic_minimum() {
        let target = [0.3, 0.7, 0.55];
        let out = minimize(
            |x: &[f64; 3]| x.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>() + 1.0,
            [0.9, 0.1, 0.1],
            &SimplexOptions { f_tolerance: 1e-14, ..SimplexOptions::default() },
        );
        assert!(out.converged);
        for (a, b) in out.x.iter().zip(&target) {
            assert!((a - b).abs() < 1e-5, "{:?}", out.x);
        }
    }

    #[test]
    fn respects_box() {
        let out = minimize(|x: &[f64; 2]| -x[0] + x[1], [0.5, 0.5], &SimplexOptions::default());
        assert_eq!(out.x, [1.0, 0.0]);
    }

    #[test]
    fn rosenbrock_in_box() {
        // minimum at (1, 1) mapped to box coordinates (0.75, 0.75) on [-1, 1.667]
        let map = |u: f64| -1.0 + u * (8.0 / 3.0);
        let out = minimize(
            |x: &[f64; 2]| {
                let (a, b) = (map(x[0]), map(x[1]));
                (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
            },
            [0.2, 0.2],
            &SimplexOptions { f_tolerance: 1e-16, max_evaluations: 10_000, ..SimplexOptions::default() },
        );
        assert!((map(out.x[0]) - 1.0).abs() < 1e-3 && (map(out.x[1]) - 1.0).abs() < 1e-3, "{out:?}");
    }

    #[test]
    fn all_infinite_does_not_converge() {
        let out = minimize(|_: &[f64; 2]| f64::NAN, [0.5, 0.5], &SimplexOptions::default());
        assert!(!out.converged);
        assert!(out.f.is_infinite());
    }
}
