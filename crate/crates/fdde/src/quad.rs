//! Product-integration quadrature for the weakly singular convolution
//!
//! ```text
//! Int_{t0}^{t_n} (t_n - s)^{a-1} e^{-b(t_n - s)} g(s) ds .
//! ```
//!
//! The singular factor `(t_n - s)^{a-1}` is integrated exactly against a
//! piecewise-linear interpolant of everything smooth; the exponential is
//! absorbed into the smooth part, so a weight row depends only on
//! `(alpha, dt, n)` and can be cached across time steps.
//!
//! On the cell `[t_j, t_{j+1}]` write `u = t_n - s`, `u_j = (n-j) dt`. The
//! weight of the right node is
//!
//! ```text
//! (1/dt) Int_{u_{j+1}}^{u_j} u^{a-1} (u_j - u) du ,
//! ```
//!
//! and the left node receives the remainder of the exact cell integral
//! `(u_j^a - u_{j+1}^a)/a`. Splitting the cell integral this way keeps the
//! row sum telescoping, so constants are integrated exactly up to rounding.

use thiserror::Error;

use crate::specfun;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("step dt must be positive, got {0}")]
    InvalidStep(f64),
    #[error("weight row index n must be >= 1")]
    EmptyRow,
    #[error("no samples supplied")]
    NoSamples,
    #[error("evaluation time {0} does not lie on the sample grid")]
    TimeOffGrid(f64),
}

/// Cached powers `m^alpha`, `m^{alpha+1}` shared by every weight row for a
/// fixed `(alpha, dt)`. Rows for different `n` reuse the same table.
#[derive(Debug, Clone)]
pub struct QuadWeights {
    alpha: f64,
    dt: f64,
    dt_alpha: f64,
    pow_a: Vec<f64>,
    pow_a1: Vec<f64>,
}

impl QuadWeights {
    pub fn new(alpha: f64, dt: f64) -> Result<Self, QuadError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(QuadError::InvalidAlpha(alpha));
        }
        if !(dt > 0.0) {
            return Err(QuadError::InvalidStep(dt));
        }
        Ok(QuadWeights {
            alpha,
            dt,
            dt_alpha: dt.powf(alpha),
            pow_a: vec![0.0, 1.0],
            pow_a1: vec![0.0, 1.0],
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn ensure(&mut self, n: usize) {
        while self.pow_a.len() <= n {
            let m = self.pow_a.len() as f64;
            self.pow_a.push(m.powf(self.alpha));
            self.pow_a1.push(m.powf(self.alpha + 1.0));
        }
    }

    /// Product-trapezoid weights `w[0..=n]` for the row ending at `t_n`.
    pub fn trapezoid_row_into(&mut self, n: usize, row: &mut Vec<f64>) -> Result<(), QuadError> {
        if n == 0 {
            return Err(QuadError::EmptyRow);
        }
        self.ensure(n);
        row.clear();
        row.resize(n + 1, 0.0);
        let a = self.alpha;
        for j in 0..n {
            let m = n - j;
            let da = self.pow_a[m] - self.pow_a[m - 1];
            let da1 = self.pow_a1[m] - self.pow_a1[m - 1];
            let cell = self.dt_alpha * da / a;
            let right = self.dt_alpha * (m as f64 * da / a - da1 / (a + 1.0));
            row[j] += cell - right;
            row[j + 1] += right;
        }
        Ok(())
    }

    /// Product-rectangle (left endpoint) weights `w[0..n]`; the predictor's
    /// history rule.
    pub fn rectangle_row_into(&mut self, n: usize, row: &mut Vec<f64>) -> Result<(), QuadError> {
        if n == 0 {
            return Err(QuadError::EmptyRow);
        }
        self.ensure(n);
        row.clear();
        row.resize(n, 0.0);
        for j in 0..n {
            let m = n - j;
            row[j] = self.dt_alpha * (self.pow_a[m] - self.pow_a[m - 1]) / self.alpha;
        }
        Ok(())
    }
}

/// Product-trapezoid weight row as a fresh vector.
pub fn product_trapezoid_weights(alpha: f64, dt: f64, n: usize) -> Result<Vec<f64>, QuadError> {
    let mut cache = QuadWeights::new(alpha, dt)?;
    let mut row = Vec::new();
    cache.trapezoid_row_into(n, &mut row)?;
    Ok(row)
}

/// Discrete `(1/Gamma(a)) Int (t_n - s)^{a-1} e^{-b (t_n - s)} g(s) ds` from
/// samples `g[0..=n]` on a uniform grid of step `dt` (so `n = g.len() - 1`).
pub fn weighted_convolution(alpha: f64, beta: f64, dt: f64, g: &[f64]) -> Result<f64, QuadError> {
    let mut cache = QuadWeights::new(alpha, dt)?;
    let mut row = Vec::new();
    weighted_convolution_cached(&mut cache, beta, g, &mut row)
}

/// Same as [`weighted_convolution`] but reusing a weight cache and row
/// buffer across calls.
pub fn weighted_convolution_cached(
    cache: &mut QuadWeights,
    beta: f64,
    g: &[f64],
    row: &mut Vec<f64>,
) -> Result<f64, QuadError> {
    if g.is_empty() {
        return Err(QuadError::NoSamples);
    }
    let n = g.len() - 1;
    if n == 0 {
        return Ok(0.0);
    }
    cache.trapezoid_row_into(n, row)?;
    let dt = cache.dt();
    let mut acc = 0.0;
    for (j, (w, gj)) in row.iter().zip(g.iter()).enumerate() {
        let decay = (-beta * dt * (n - j) as f64).exp();
        acc += w * decay * gj;
    }
    let gamma_alpha = specfun::gamma(cache.alpha()).expect("alpha validated in (0,1)");
    Ok(acc / gamma_alpha)
}

/// One row of the decay diagnostic produced by [`kernel_decay_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct KernelDecayReport {
    /// `(t, value)` pairs of the weighted convolution of `k` up to each `t`.
    pub points: Vec<(f64, f64)>,
    /// True when the second half of `points` is nonincreasing and the final
    /// value sits at or below `threshold`.
    pub decaying: bool,
    pub threshold: f64,
}

/// Evaluates the weighted convolution of a sampled nonnegative gain `k` at
/// each requested time and reports whether the tail dies out.
///
/// `k[j]` samples `k(t0 + j dt)`; every entry of `eval_times` must lie on
/// that grid and inside the sampled range.
pub fn kernel_decay_check(
    alpha: f64,
    beta: f64,
    t0: f64,
    dt: f64,
    k: &[f64],
    eval_times: &[f64],
    threshold: f64,
) -> Result<KernelDecayReport, QuadError> {
    if k.is_empty() {
        return Err(QuadError::NoSamples);
    }
    let mut cache = QuadWeights::new(alpha, dt)?;
    let mut row = Vec::new();
    let mut points = Vec::with_capacity(eval_times.len());
    for &t in eval_times {
        let u = (t - t0) / dt;
        let n = u.round();
        if (u - n).abs() > 1e-9 * u.abs().max(1.0) || n < 0.0 || n as usize >= k.len() {
            return Err(QuadError::TimeOffGrid(t));
        }
        let n = n as usize;
        let value = if n == 0 {
            0.0
        } else {
            weighted_convolution_cached(&mut cache, beta, &k[..=n], &mut row)?
        };
        points.push((t, value));
    }

    let tail_start = points.len() / 2;
    let tail = &points[tail_start..];
    let monotone = tail.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12);
    let below = points.last().map(|&(_, v)| v <= threshold).unwrap_or(false);
    Ok(KernelDecayReport { points, decaying: monotone && below, threshold })
}
