//! Numerical stability diagnostics.
//!
//! Turns the qualitative theory behind the solver into measurable
//! quantities: the contraction bound deciding when the solution operator is
//! a sup-norm contraction, the singular-kernel Gronwall envelope dominating
//! the distance between two solutions, an empirical Lipschitz probe for
//! right-hand sides, and an ensemble harness measuring how fast solutions
//! from different histories collapse onto each other.

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{FdeProblem, HistoryFunction, RhsField, Trajectory};
use crate::solver::{self, SolveError, SolveResult, SolverConfig};
use crate::specfun;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("invalid analysis parameter: {0}")]
    Domain(String),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("trajectories are not on the same grid: {0}")]
    GridMismatch(String),
    #[error("stability harness needs at least 2 initial functions, got {0}")]
    EnsembleTooSmall(usize),
}

/// The contraction bound
/// `l ((t0+h)^{a-1} e^{-b(t0+h)} / (b Gamma(a)) + (t0+h)^a / Gamma(a+1))`.
///
/// The solution operator is a sup-norm contraction (and the problem has a
/// unique bounded solution) when this is below one. Callers compare against
/// 1; the value itself is reported by the solvers' diagnostics.
pub fn contraction_bound(
    l: f64,
    alpha: f64,
    beta: f64,
    t0: f64,
    h: f64,
) -> Result<f64, AnalysisError> {
    if !(l >= 0.0) {
        return Err(AnalysisError::Domain(format!("lipschitz constant must be >= 0, got {l}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(AnalysisError::Domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if !(beta > 0.0) {
        return Err(AnalysisError::Domain(format!("beta must be positive, got {beta}")));
    }
    if !(h > 0.0) {
        return Err(AnalysisError::Domain(format!("delay must be positive, got {h}")));
    }
    if !(t0 >= 0.0) {
        return Err(AnalysisError::Domain(format!("t0 must be nonnegative, got {t0}")));
    }
    let edge = t0 + h;
    let gamma_a = specfun::gamma(alpha).expect("alpha in (0,1)");
    let gamma_a1 = specfun::gamma(alpha + 1.0).expect("alpha + 1 in (1,2)");
    Ok(l * (edge.powf(alpha - 1.0) * (-beta * edge).exp() / (beta * gamma_a)
        + edge.powf(alpha) / gamma_a1))
}

/// Inputs of the pointwise envelope on `|x(t) - y(t)|` for two solutions
/// started from different histories.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeParams {
    /// `|x(t0) - y(t0)|`
    pub x0_minus_y0: f64,
    /// Lipschitz constant of the right-hand side.
    pub lipschitz: f64,
    /// The singular-kernel Gronwall constant (fitted empirically; see
    /// [`fit_gronwall_k`]).
    pub gronwall_k: f64,
    pub alpha: f64,
    pub beta: f64,
    pub t0: f64,
    pub delay: f64,
}

/// Envelope value
/// `|x0-y0| e^{-b(t-h-t0)} (1 + K l e^{bh} (t-t0)^a / Gamma(a+1))`,
/// valid for `t >= t0 + h`.
pub fn gronwall_envelope(params: &EnvelopeParams, t: f64) -> Result<f64, AnalysisError> {
    let EnvelopeParams { x0_minus_y0, lipschitz, gronwall_k, alpha, beta, t0, delay } = *params;
    if x0_minus_y0 < 0.0 || lipschitz < 0.0 || gronwall_k < 0.0 {
        return Err(AnalysisError::Domain(
            "envelope parameters must be nonnegative".into(),
        ));
    }
    if t < t0 + delay - 1e-12 {
        return Err(AnalysisError::Domain(format!(
            "envelope only valid for t >= t0 + h = {}, got {t}",
            t0 + delay
        )));
    }
    let gamma_a1 = specfun::gamma(alpha + 1.0).expect("alpha + 1 in (1,2)");
    let growth =
        1.0 + gronwall_k * lipschitz * (beta * delay).exp() * (t - t0).powf(alpha) / gamma_a1;
    Ok(x0_minus_y0 * (-beta * (t - delay - t0)).exp() * growth)
}

/// Smallest `K >= 0` such that [`gronwall_envelope`] with that constant
/// dominates `|x(t) - y(t)|` at every grid point `t >= t0 + h`.
///
/// Returns `f64::INFINITY` when no finite constant suffices on the computed
/// horizon (which would mean the envelope's functional form is violated).
pub fn fit_gronwall_k(
    problem: &FdeProblem,
    lipschitz: f64,
    traj_a: &Trajectory,
    traj_b: &Trajectory,
) -> Result<f64, AnalysisError> {
    if lipschitz < 0.0 {
        return Err(AnalysisError::Domain("lipschitz constant must be >= 0".into()));
    }
    if traj_a.len() != traj_b.len()
        || traj_a.dt() != traj_b.dt()
        || traj_a.delay_steps() != traj_b.delay_steps()
        || traj_a.t0() != traj_b.t0()
    {
        return Err(AnalysisError::GridMismatch(format!(
            "lengths {} vs {}, dt {} vs {}",
            traj_a.len(),
            traj_b.len(),
            traj_a.dt(),
            traj_b.dt()
        )));
    }

    let alpha = problem.alpha();
    let beta = problem.beta();
    let t0 = problem.t0();
    let delay = problem.delay();
    let delay_steps = traj_a.delay_steps();
    let d0 = (traj_a.values()[delay_steps] - traj_b.values()[delay_steps]).abs();
    let gamma_a1 = specfun::gamma(alpha + 1.0).expect("alpha + 1 in (1,2)");
    let slope = lipschitz * (beta * delay).exp() / gamma_a1;

    let mut k_min: f64 = 0.0;
    for j in 2 * delay_steps..traj_a.len() {
        let t = traj_a.time(j);
        let dist = (traj_a.values()[j] - traj_b.values()[j]).abs();
        let base = d0 * (-beta * (t - delay - t0)).exp();
        if dist <= base {
            continue;
        }
        if base == 0.0 || slope == 0.0 || t <= t0 {
            return Ok(f64::INFINITY);
        }
        let required = (dist / base - 1.0) / (slope * (t - t0).powf(alpha));
        k_min = k_min.max(required);
    }
    Ok(k_min)
}

/// Randomized probing plan for [`estimate_lipschitz`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSpec {
    /// Range of anchor times t.
    pub t_range: (f64, f64),
    /// Segment node values are drawn uniformly from `[-amplitude, amplitude]`.
    pub amplitude: f64,
    /// Delay horizon of the probe segments.
    pub delay: f64,
    /// Grid nodes per segment window.
    pub segment_steps: usize,
    pub probes: usize,
    pub seed: u64,
}

impl ProbeSpec {
    pub fn new(delay: f64) -> Self {
        ProbeSpec {
            t_range: (0.0, 10.0),
            amplitude: 4.0,
            delay,
            segment_steps: 16,
            probes: 10_000,
            seed: 0,
        }
    }
}

/// Empirical Lipschitz constant: the largest sampled ratio
/// `|f(t, u) - f(t, v)| / ||u - v||` over random segment pairs. A lower
/// bound on the true constant.
pub fn estimate_lipschitz(rhs: &dyn RhsField, spec: &ProbeSpec) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let steps = spec.segment_steps.max(1);
    let dt = spec.delay / steps as f64;
    let mut best: f64 = 0.0;
    for _ in 0..spec.probes {
        let t = rng.random_range(spec.t_range.0..=spec.t_range.1);
        let u_vals: Vec<f64> =
            (0..=steps).map(|_| rng.random_range(-spec.amplitude..=spec.amplitude)).collect();
        let v_vals: Vec<f64> =
            (0..=steps).map(|_| rng.random_range(-spec.amplitude..=spec.amplitude)).collect();
        let sep = u_vals
            .iter()
            .zip(&v_vals)
            .map(|(u, v)| (u - v).abs())
            .fold(0.0f64, f64::max);
        if sep < 1e-12 {
            continue;
        }
        let ta = Trajectory::from_values(t, dt, spec.delay, u_vals).expect("probe grid");
        let tb = Trajectory::from_values(t, dt, spec.delay, v_vals).expect("probe grid");
        let fu = rhs.eval(t, &ta.segment_at(t).expect("anchor in range"));
        let fv = rhs.eval(t, &tb.segment_at(t).expect("anchor in range"));
        best = best.max((fu - fv).abs() / sep);
    }
    best
}

/// Tail model `C e^{-rate t} (1 + power_coeff t^alpha)` fitted to the
/// pairwise-distance curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub amplitude: f64,
    pub rate: f64,
    pub power_coeff: f64,
}

impl DecayFit {
    fn zero() -> Self {
        DecayFit { amplitude: 0.0, rate: 0.0, power_coeff: 0.0 }
    }
}

/// Ensemble measurements behind the uniform-asymptotic-stability check: the
/// pairwise distance curves, the stabilization times `T(eps)`, and a fitted
/// decay envelope over the tail half of the horizon.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub ensemble_size: usize,
    /// Grid times from t0 to the horizon.
    pub times: Vec<f64>,
    /// Index pairs (i, j), i < j, in ensemble order.
    pub pair_labels: Vec<(usize, usize)>,
    /// `|x_i(t) - x_j(t)|` per pair, aligned with `times`.
    pub pair_distances: Vec<Vec<f64>>,
    /// Max over pairs at each time.
    pub max_pairwise: Vec<f64>,
    /// For each requested epsilon, the earliest grid time after which every
    /// pairwise distance stays at or below it (`None` when the horizon never
    /// settles).
    pub t_of_eps: Vec<(f64, Option<f64>)>,
    pub decay_fit: DecayFit,
}

/// Report plus the per-member solves it was reduced from.
#[derive(Debug, Clone)]
pub struct StabilityOutcome {
    pub report: StabilityReport,
    pub members: Vec<SolveResult>,
}

/// Solves one ensemble member per initial history (members run
/// concurrently), then reduces pairwise distance curves, stabilization
/// times and the tail decay fit.
pub fn stability_harness(
    problem: &FdeProblem,
    phis: &[HistoryFunction],
    config: &SolverConfig,
    eps_list: &[f64],
) -> Result<StabilityOutcome, AnalysisError> {
    if phis.len() < 2 {
        return Err(AnalysisError::EnsembleTooSmall(phis.len()));
    }
    let members: Vec<SolveResult> = phis
        .par_iter()
        .map(|phi| solver::solve(&problem.with_phi(phi.clone()), config))
        .collect::<Result<_, _>>()?;

    let first = &members[0].trajectory;
    let delay_steps = first.delay_steps();
    let times: Vec<f64> = (delay_steps..first.len()).map(|j| first.time(j)).collect();

    let mut pair_labels = Vec::new();
    let mut pair_distances = Vec::new();
    for i in 0..members.len() {
        for j in i + 1..members.len() {
            let a = members[i].trajectory.values();
            let b = members[j].trajectory.values();
            let dist: Vec<f64> = (delay_steps..first.len())
                .map(|idx| (a[idx] - b[idx]).abs())
                .collect();
            pair_labels.push((i, j));
            pair_distances.push(dist);
        }
    }
    let max_pairwise: Vec<f64> = (0..times.len())
        .map(|idx| pair_distances.iter().map(|d| d[idx]).fold(0.0f64, f64::max))
        .collect();

    let t_of_eps = eps_list
        .iter()
        .map(|&eps| (eps, stabilization_time(&times, &max_pairwise, eps)))
        .collect();

    let decay_fit = fit_decay_tail(&times, &max_pairwise, problem.alpha());

    Ok(StabilityOutcome {
        report: StabilityReport {
            ensemble_size: members.len(),
            times,
            pair_labels,
            pair_distances,
            max_pairwise,
            t_of_eps,
            decay_fit,
        },
        members,
    })
}

/// Earliest grid time after which `max_pairwise` stays at or below `eps`.
fn stabilization_time(times: &[f64], max_pairwise: &[f64], eps: f64) -> Option<f64> {
    let last_exceed = max_pairwise.iter().rposition(|&d| d > eps);
    match last_exceed {
        None => Some(times[0]),
        Some(idx) if idx + 1 < times.len() => Some(times[idx + 1]),
        Some(_) => None,
    }
}

/// Least squares on `log d` over the tail half-window. The power-term
/// coefficient is scanned over a fixed grid (zero plus a log-spaced range)
/// and the remaining two parameters solved in closed form, which keeps the
/// fit deterministic.
fn fit_decay_tail(times: &[f64], distances: &[f64], alpha: f64) -> DecayFit {
    let start = times.len() / 2;
    let pts: Vec<(f64, f64)> = times[start..]
        .iter()
        .zip(&distances[start..])
        .filter(|&(_, &d)| d > 1e-15)
        .map(|(&t, &d)| (t, d))
        .collect();
    if pts.len() < 3 {
        return DecayFit::zero();
    }

    let mut candidates = vec![0.0f64];
    for i in 0..=60 {
        candidates.push(10f64.powf(-3.0 + 6.0 * i as f64 / 60.0));
    }

    let mut best: Option<(f64, DecayFit)> = None;
    for c in candidates {
        // z = log d - log(1 + c t^alpha) modeled as logC - rate * t.
        let zs: Vec<(f64, f64)> = pts
            .iter()
            .map(|&(t, d)| (t, d.ln() - (1.0 + c * t.powf(alpha)).ln()))
            .collect();
        let n = zs.len() as f64;
        let sum_t: f64 = zs.iter().map(|p| p.0).sum();
        let sum_z: f64 = zs.iter().map(|p| p.1).sum();
        let sum_tt: f64 = zs.iter().map(|p| p.0 * p.0).sum();
        let sum_tz: f64 = zs.iter().map(|p| p.0 * p.1).sum();
        let denom = n * sum_tt - sum_t * sum_t;
        if denom.abs() < 1e-12 {
            continue;
        }
        let slope = (n * sum_tz - sum_t * sum_z) / denom;
        let intercept = (sum_z - slope * sum_t) / n;
        let rss: f64 = zs
            .iter()
            .map(|&(t, z)| {
                let r = z - (intercept + slope * t);
                r * r
            })
            .sum();
        let fit = DecayFit { amplitude: intercept.exp(), rate: -slope, power_coeff: c };
        if best.as_ref().map(|(b, _)| rss < *b).unwrap_or(true) {
            best = Some((rss, fit));
        }
    }
    best.map(|(_, f)| f).unwrap_or_else(DecayFit::zero)
}
