//! Least squares for the four linear LPPL coefficients at fixed `(t_c, m, ω)`.

use nalgebra::{Matrix4, Vector4};

use crate::error::{Error, Result};
use crate::model::basis_at;
use crate::timeseries::{FitWindow, PriceSeries};

/// Linear coefficients `(A, B, C1, C2)` and the residual sum of squares.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub a: f64,
    pub b: f64,
    pub c1: f64,
    pub c2: f64,
    pub sse: f64,
}

impl LinearFit {
    pub fn coefficients(&self) -> [f64; 4] {
        [self.a, self.b, self.c1, self.c2]
    }
}

/// Regresses the window's log-prices on the LPPL basis at `(t_c, m, ω)`.
///
/// Rank-deficient designs yield the minimum-norm solution.
pub fn solve_linear(series: &PriceSeries, window: &FitWindow, t_c: f64, m: f64, omega: f64) -> Result<LinearFit> {
    let times = series.window_times(window);
    let ys = series.window_log_prices(window);
    if let Some(&last) = times.last() {
        if !(t_c > last) {
            return Err(Error::BeyondCriticalTime { t: last, t_c });
        }
    }
    let distances: Vec<f64> = times.iter().map(|t| t_c - t).collect();
    let mut ws = Workspace::default();
    ws.solve(&distances, ys, m, omega)
}

/// Reusable buffers for repeated solves over one window.
#[derive(Debug, Default)]
pub(crate) struct Workspace {
    design: Vec<f64>,
    qr: Vec<f64>,
    rhs: Vec<f64>,
}

impl Workspace {
    /// Solves with `distances[i] = t_c - t_i > 0`.
    pub(crate) fn solve(&mut self, distances: &[f64], ys: &[f64], m: f64, omega: f64) -> Result<LinearFit> {
        let n = distances.len();
        if n < 4 || ys.len() != n {
            return Err(Error::Numerical(format!("{n} observations cannot determine 4 coefficients")));
        }
        self.design.clear();
        self.design.resize(4 * n, 0.0);
        for (i, &dt) in distances.iter().enumerate() {
            let row = basis_at(dt, m, omega);
            for (j, v) in row.iter().enumerate() {
                self.design[j * n + i] = *v;
            }
        }
        if self.design.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite basis at m = {m}, omega = {omega}")));
        }
        self.qr.clear();
        self.qr.extend_from_slice(&self.design);
        self.rhs.clear();
        self.rhs.extend_from_slice(ys);

        let r = householder_qr(&mut self.qr, &mut self.rhs, n);
        let head = Vector4::new(self.rhs[0], self.rhs[1], self.rhs[2], self.rhs[3]);
        let svd = r.svd(true, true);
        let cutoff = svd.singular_values.max() * (n as f64) * f64::EPSILON;
        let beta = svd.solve(&head, cutoff).map_err(|e| Error::Numerical(format!("linear solve failed: {e}")))?;

        let mut sse = 0.0;
        for (i, y) in ys.iter().enumerate() {
            let fitted: f64 = (0..4).map(|j| self.design[j * n + i] * beta[j]).sum();
            let r = y - fitted;
            sse += r * r;
        }
        if !sse.is_finite() || beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::Numerical("non-finite least-squares solution".into()));
        }
        Ok(LinearFit { a: beta[0], b: beta[1], c1: beta[2], c2: beta[3], sse })
    }
}

/// In-place Householder QR of a column-major `n × 4` matrix, applying the
/// same reflections to `rhs`. Returns the triangular factor.
fn householder_qr(a: &mut [f64], rhs: &mut [f64], n: usize) -> Matrix4<f64> {
    let mut r = Matrix4::zeros();
    for k in 0..4 {
        let (done, rest) = a.split_at_mut((k + 1) * n);
        let col = &mut done[k * n..];
        let norm = col[k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            for j in (k + 1)..4 {
                r[(k, j)] = rest[(j - k - 1) * n + k];
            }
            continue;
        }
        let alpha = if col[k] > 0.0 { -norm } else { norm };
        col[k] -= alpha;
        let vnorm2: f64 = col[k..].iter().map(|v| v * v).sum();
        if vnorm2 > 0.0 {
            for j in (k + 1)..4 {
                let other = &mut rest[(j - k - 1) * n..(j - k) * n];
                reflect(&col[k..], &mut other[k..], vnorm2);
            }
            reflect(&col[k..], &mut rhs[k..], vnorm2);
        }
        r[(k, k)] = alpha;
        for j in (k + 1)..4 {
            r[(k, j)] = rest[(j - k - 1) * n + k];
        }
    }
    r
}

#[inline]
fn reflect(v: &[f64], x: &mut [f64], vnorm2: f64) {
    let s: f64 = v.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
    let f = 2.0 * s / vnorm2;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= f * vi;
    }
}
