//! Problem definition and trajectory storage.
//!
//! [`FdeProblem`] is the validated tuple (alpha, beta, t0, h, f, phi).
//! [`Trajectory`] holds a uniformly gridded sample of the solution on
//! `[t0 - h, T]`; [`SegmentView`] is the read-only window `[t - h, t]` that a
//! right-hand side sees through `value_at` / `sup_norm`. Delayed lookups use
//! linear interpolation, which is exact at grid points; the delay horizon is
//! required to be an integer multiple of the step so the built-in point-delay
//! forcings always land on grid nodes.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Snap tolerance (in fractional grid units) below which a query time is
/// treated as lying exactly on a node.
const GRID_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("alpha must lie in (0, 1), got {0}")]
    AlphaOutOfRange(f64),
    #[error("beta must be positive, got {0}")]
    BetaNotPositive(f64),
    #[error("delay horizon h must be positive, got {0}")]
    DelayNotPositive(f64),
    #[error("initial time t0 must be nonnegative, got {0}")]
    NegativeStartTime(f64),
    #[error("step dt must be positive, got {0}")]
    StepNotPositive(f64),
    #[error("delay horizon {h} is not an integer multiple of dt {dt}")]
    DelayGridMismatch { h: f64, dt: f64 },
    #[error("final time {t_final} does not lie a whole number of steps after t0 = {t0}")]
    HorizonGridMismatch { t0: f64, t_final: f64 },
    #[error("time {t} outside the trajectory range [{lo}, {hi}]")]
    TimeOutOfRange { t: f64, lo: f64, hi: f64 },
    #[error("trajectory needs at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("history function produced a non-finite value at t = {0}")]
    NonFiniteHistory(f64),
}

/// Initial data on `[t0 - h, t0]`: either a closed-form callable or gridded
/// samples read back with linear interpolation.
#[derive(Clone)]
pub enum HistoryFunction {
    Callable(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    Sampled { start: f64, dt: f64, values: Arc<Vec<f64>> },
}

impl HistoryFunction {
    pub fn from_fn<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        HistoryFunction::Callable(Arc::new(f))
    }

    pub fn constant(c: f64) -> Self {
        HistoryFunction::from_fn(move |_| c)
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            HistoryFunction::Callable(f) => f(t),
            HistoryFunction::Sampled { start, dt, values } => {
                interp_uniform(*start, *dt, values, t)
            }
        }
    }
}

impl fmt::Debug for HistoryFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HistoryFunction::Callable(_) => f.write_str("HistoryFunction::Callable"),
            HistoryFunction::Sampled { start, dt, values } => f
                .debug_struct("HistoryFunction::Sampled")
                .field("start", start)
                .field("dt", dt)
                .field("len", &values.len())
                .finish(),
        }
    }
}

fn interp_uniform(start: f64, dt: f64, values: &[f64], t: f64) -> f64 {
    debug_assert!(!values.is_empty());
    if values.len() == 1 {
        return values[0];
    }
    let u = (t - start) / dt;
    let last = (values.len() - 1) as f64;
    let u = u.clamp(0.0, last);
    let j = (u.floor() as usize).min(values.len() - 2);
    let frac = u - j as f64;
    if frac <= GRID_SNAP {
        values[j]
    } else if frac >= 1.0 - GRID_SNAP {
        values[j + 1]
    } else {
        values[j] * (1.0 - frac) + values[j + 1] * frac
    }
}

/// The functional f(t, y_t). Implementations must be deterministic; they are
/// shared across worker threads when ensembles run concurrently.
pub trait RhsField: Send + Sync {
    fn eval(&self, t: f64, segment: &SegmentView<'_>) -> f64;

    /// Known global Lipschitz constant of `f(t, .)` in the segment sup-norm,
    /// when one is available. Used by contraction diagnostics only.
    fn lipschitz_hint(&self) -> Option<f64> {
        None
    }
}

impl<F> RhsField for F
where
    F: Fn(f64, &SegmentView<'_>) -> f64 + Send + Sync,
{
    fn eval(&self, t: f64, segment: &SegmentView<'_>) -> f64 {
        self(t, segment)
    }
}

/// Bounded forcing with unit point delay:
/// `f(t, y_t) = sin^4(y(t-1)) / (8 (1 + e^{-2t})) + 1`.
///
/// The prefactor is the stable form of `e^t / (8 (e^t + e^{-t}))`; the
/// sigmoid factor keeps it below 1/8 and the quartic sine is 4-Lipschitz,
/// so the whole map is Lipschitz with constant 1/2 in the delayed value.
#[derive(Debug, Clone, Copy)]
pub struct SaturatedSineRhs;

impl RhsField for SaturatedSineRhs {
    fn eval(&self, t: f64, segment: &SegmentView<'_>) -> f64 {
        let delayed = segment.value_at(-1.0);
        let gain = 1.0 / (8.0 * (1.0 + (-2.0 * t).exp()));
        gain * delayed.sin().powi(4) + 1.0
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        Some(0.5)
    }
}

/// Algebraically saturated forcing with unit point delay and decaying gain:
/// `f(t, y_t) = 10 (t+1)^{-3/4} u / (1 + |u|)` with `u = y(t-1)`.
///
/// Not a contraction for the standard parameter set (the gain reaches 10 at
/// t = 0); it instead satisfies the sublinear growth bound
/// `|f| <= 10 (t+1)^{-3/4} |u|`.
#[derive(Debug, Clone, Copy)]
pub struct SaturatedDelayRhs;

impl SaturatedDelayRhs {
    /// The decaying gain `k(t) = 10 (t+1)^{-3/4}` that bounds `|f|`.
    pub fn growth_gain(t: f64) -> f64 {
        10.0 * (t + 1.0).powf(-0.75)
    }
}

impl RhsField for SaturatedDelayRhs {
    fn eval(&self, t: f64, segment: &SegmentView<'_>) -> f64 {
        let u = segment.value_at(-1.0);
        Self::growth_gain(t) * u / (1.0 + u.abs())
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        Some(10.0)
    }
}

/// f(t, y_t) = c, independent of the state.
#[derive(Debug, Clone, Copy)]
pub struct ConstantRhs(pub f64);

impl RhsField for ConstantRhs {
    fn eval(&self, _t: f64, _segment: &SegmentView<'_>) -> f64 {
        self.0
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// f(t, y_t) = offset + slope * t, a state-independent forcing ramp.
#[derive(Debug, Clone, Copy)]
pub struct TimeLinearRhs {
    pub offset: f64,
    pub slope: f64,
}

impl RhsField for TimeLinearRhs {
    fn eval(&self, t: f64, _segment: &SegmentView<'_>) -> f64 {
        self.offset + self.slope * t
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// f(t, y_t) = gain * y(t - h), the linear point-delay form.
#[derive(Debug, Clone, Copy)]
pub struct DelayLinearRhs {
    pub gain: f64,
}

impl RhsField for DelayLinearRhs {
    fn eval(&self, _t: f64, segment: &SegmentView<'_>) -> f64 {
        self.gain * segment.value_at(-segment.delay())
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        Some(self.gain.abs())
    }
}

/// The forcing of the first built-in benchmark problem.
pub fn example_4_1_rhs() -> Arc<dyn RhsField> {
    Arc::new(SaturatedSineRhs)
}

/// The forcing of the second built-in benchmark problem.
pub fn example_4_2_rhs() -> Arc<dyn RhsField> {
    Arc::new(SaturatedDelayRhs)
}

/// A validated initial value problem
/// `D^alpha [y e^{beta t}] = f(t, y_t) e^{beta t}` with history `phi`.
#[derive(Clone)]
pub struct FdeProblem {
    alpha: f64,
    beta: f64,
    t0: f64,
    delay: f64,
    rhs: Arc<dyn RhsField>,
    phi: HistoryFunction,
}

impl fmt::Debug for FdeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FdeProblem")
            .field("alpha", &self.alpha)
            .field("beta", &self.beta)
            .field("t0", &self.t0)
            .field("delay", &self.delay)
            .finish()
    }
}

/// Validating constructor for [`FdeProblem`].
pub fn make_problem(
    alpha: f64,
    beta: f64,
    t0: f64,
    h: f64,
    rhs: Arc<dyn RhsField>,
    phi: HistoryFunction,
) -> Result<FdeProblem, ModelError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ModelError::AlphaOutOfRange(alpha));
    }
    if !(beta > 0.0) {
        return Err(ModelError::BetaNotPositive(beta));
    }
    if !(h > 0.0) {
        return Err(ModelError::DelayNotPositive(h));
    }
    if !(t0 >= 0.0) {
        return Err(ModelError::NegativeStartTime(t0));
    }
    Ok(FdeProblem { alpha, beta, t0, delay: h, rhs, phi })
}

impl FdeProblem {
    pub fn new(
        alpha: f64,
        beta: f64,
        t0: f64,
        h: f64,
        rhs: Arc<dyn RhsField>,
        phi: HistoryFunction,
    ) -> Result<Self, ModelError> {
        make_problem(alpha, beta, t0, h, rhs, phi)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    pub fn rhs(&self) -> &Arc<dyn RhsField> {
        &self.rhs
    }

    pub fn phi(&self) -> &HistoryFunction {
        &self.phi
    }

    /// Same equation, different initial history. Used to build ensembles.
    pub fn with_phi(&self, phi: HistoryFunction) -> Self {
        FdeProblem { phi, ..self.clone() }
    }
}

/// Uniformly gridded solution samples on `[t0 - h, T]`.
///
/// Grid nodes are `t_j = t0 + (j - delay_steps) * dt`; the first
/// `delay_steps + 1` samples hold the initial history. Immutable once a
/// solver has produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    t0: f64,
    dt: f64,
    delay_steps: usize,
    values: Vec<f64>,
}

impl Trajectory {
    /// Builds a trajectory holding only the sampled history `phi` on
    /// `[t0 - h, t0]`, with room reserved for `future_steps` more samples.
    pub fn from_history(
        t0: f64,
        dt: f64,
        h: f64,
        phi: &HistoryFunction,
        future_steps: usize,
    ) -> Result<Self, ModelError> {
        if !(dt > 0.0) {
            return Err(ModelError::StepNotPositive(dt));
        }
        let delay_steps = exact_steps(h, dt).ok_or(ModelError::DelayGridMismatch { h, dt })?;
        let mut values = Vec::with_capacity(delay_steps + 1 + future_steps);
        for j in 0..=delay_steps {
            let t = grid_time(t0, dt, delay_steps, j);
            let v = phi.eval(t);
            if !v.is_finite() {
                return Err(ModelError::NonFiniteHistory(t));
            }
            values.push(v);
        }
        Ok(Trajectory { t0, dt, delay_steps, values })
    }

    /// Wraps externally produced samples. `values[0]` sits at `t0 - h`.
    pub fn from_values(t0: f64, dt: f64, h: f64, values: Vec<f64>) -> Result<Self, ModelError> {
        if !(dt > 0.0) {
            return Err(ModelError::StepNotPositive(dt));
        }
        let delay_steps = exact_steps(h, dt).ok_or(ModelError::DelayGridMismatch { h, dt })?;
        if values.len() < delay_steps + 1 {
            return Err(ModelError::TooFewSamples { need: delay_steps + 1, got: values.len() });
        }
        Ok(Trajectory { t0, dt, delay_steps, values })
    }

    pub(crate) fn push(&mut self, value: f64) {
        self.values.push(value);
    }

    pub(crate) fn set_last(&mut self, value: f64) {
        let last = self.values.len() - 1;
        self.values[last] = value;
    }

    pub(crate) fn set_value(&mut self, j: usize, value: f64) {
        self.values[j] = value;
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// The delay horizon h.
    pub fn delay(&self) -> f64 {
        self.delay_steps as f64 * self.dt
    }

    pub fn delay_steps(&self) -> usize {
        self.delay_steps
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Grid time of sample `j` (sample 0 sits at `t0 - h`).
    pub fn time(&self, j: usize) -> f64 {
        grid_time(self.t0, self.dt, self.delay_steps, j)
    }

    pub fn start_time(&self) -> f64 {
        self.time(0)
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.values.len() - 1)
    }

    /// Linear interpolation; exact at grid nodes.
    ///
    /// # Panics
    /// Panics when `t` lies outside `[t0 - h, end]` by more than the snap
    /// tolerance; callers validate ranges through [`Trajectory::segment_at`].
    pub fn value_at(&self, t: f64) -> f64 {
        let u = (t - self.t0) / self.dt + self.delay_steps as f64;
        let last = (self.values.len() - 1) as f64;
        assert!(
            u >= -GRID_SNAP && u <= last + GRID_SNAP,
            "time {t} outside trajectory range [{}, {}]",
            self.start_time(),
            self.end_time()
        );
        let u = u.clamp(0.0, last);
        let j = (u.floor() as usize).min(self.values.len().saturating_sub(2));
        let frac = u - j as f64;
        if self.values.len() == 1 || frac <= GRID_SNAP {
            self.values[j]
        } else if frac >= 1.0 - GRID_SNAP {
            self.values[j + 1]
        } else {
            self.values[j] * (1.0 - frac) + self.values[j + 1] * frac
        }
    }

    /// History window `[t - h, t]` anchored at `t`.
    pub fn segment_at(&self, t: f64) -> Result<SegmentView<'_>, ModelError> {
        let lo = self.t0;
        let hi = self.end_time();
        if t < lo - GRID_SNAP * self.dt || t > hi + GRID_SNAP * self.dt {
            return Err(ModelError::TimeOutOfRange { t, lo, hi });
        }
        Ok(SegmentView { traj: self, t })
    }
}

fn exact_steps(span: f64, dt: f64) -> Option<usize> {
    if !(span > 0.0) || !(dt > 0.0) {
        return None;
    }
    let ratio = span / dt;
    let rounded = ratio.round();
    if (ratio - rounded).abs() <= GRID_SNAP * ratio.max(1.0) && rounded >= 1.0 {
        Some(rounded as usize)
    } else {
        None
    }
}

fn grid_time(t0: f64, dt: f64, delay_steps: usize, j: usize) -> f64 {
    t0 + (j as f64 - delay_steps as f64) * dt
}

/// Number of grid steps between `t0` and `t_final`, if it is whole.
pub fn horizon_steps(t0: f64, t_final: f64, dt: f64) -> Result<usize, ModelError> {
    exact_steps(t_final - t0, dt).ok_or(ModelError::HorizonGridMismatch { t0, t_final })
}

/// Read-only view of the history segment `y_t`: `value_at(theta)` for
/// `theta` in `[-h, 0]` and the discrete sup-norm over the window's grid
/// nodes.
pub struct SegmentView<'a> {
    traj: &'a Trajectory,
    t: f64,
}

impl<'a> SegmentView<'a> {
    /// Anchor time t.
    pub fn anchor(&self) -> f64 {
        self.t
    }

    /// Delay horizon h of the underlying trajectory.
    pub fn delay(&self) -> f64 {
        self.traj.delay()
    }

    /// y(t + theta) for theta in [-h, 0], linearly interpolated.
    pub fn value_at(&self, theta: f64) -> f64 {
        let h = self.traj.delay();
        assert!(
            theta >= -h - GRID_SNAP && theta <= GRID_SNAP,
            "segment offset {theta} outside [-{h}, 0]"
        );
        self.traj.value_at(self.t + theta.clamp(-h, 0.0))
    }

    /// Discrete realization of ||y_t||: the max of |y| over grid nodes in
    /// `[t - h, t]`.
    pub fn sup_norm(&self) -> f64 {
        let dt = self.traj.dt();
        let start = self.traj.start_time();
        let u_lo = (self.t - self.traj.delay() - start) / dt;
        let u_hi = (self.t - start) / dt;
        let j_lo = (u_lo - GRID_SNAP).ceil().max(0.0) as usize;
        let j_hi = ((u_hi + GRID_SNAP).floor() as usize).min(self.traj.len() - 1);
        let mut m: f64 = 0.0;
        for j in j_lo..=j_hi {
            m = m.max(self.traj.values()[j].abs());
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn const_phi(c: f64) -> HistoryFunction {
        HistoryFunction::constant(c)
    }

    #[test]
    fn make_problem_validates_ranges() {
        let rhs = example_4_1_rhs();
        let phi = HistoryFunction::from_fn(f64::sin);
        assert!(make_problem(0.5, 1.0, 0.0, 1.0, rhs.clone(), phi.clone()).is_ok());
        assert!(matches!(
            make_problem(1.2, 1.0, 0.0, 1.0, rhs.clone(), phi.clone()),
            Err(ModelError::AlphaOutOfRange(_))
        ));
        assert!(matches!(
            make_problem(0.5, -1.0, 0.0, 1.0, rhs.clone(), phi.clone()),
            Err(ModelError::BetaNotPositive(_))
        ));
        assert!(matches!(
            make_problem(0.5, 1.0, 0.0, -1.0, rhs.clone(), phi.clone()),
            Err(ModelError::DelayNotPositive(_))
        ));
        assert!(matches!(
            make_problem(0.5, 1.0, -0.1, 1.0, rhs, phi),
            Err(ModelError::NegativeStartTime(_))
        ));
    }

    #[test]
    fn history_must_be_grid_aligned() {
        let phi = const_phi(1.0);
        assert!(Trajectory::from_history(0.0, 0.3, 1.0, &phi, 0).is_err());
        assert!(Trajectory::from_history(0.0, 0.25, 1.0, &phi, 0).is_ok());
    }

    #[test]
    fn history_reproduces_phi_at_grid_points() {
        let phi = HistoryFunction::from_fn(f64::sin);
        let traj = Trajectory::from_history(0.0, 0.125, 1.0, &phi, 0).unwrap();
        for j in 0..traj.len() {
            let t = traj.time(j);
            assert_eq!(traj.values()[j], t.sin());
            assert_eq!(traj.value_at(t), t.sin());
        }
    }

    #[test]
    fn segment_constant_trajectory() {
        let traj =
            Trajectory::from_history(0.0, 0.25, 1.0, &const_phi(-2.5), 0).unwrap();
        let seg = traj.segment_at(0.0).unwrap();
        for k in 0..=4 {
            let theta = -1.0 + 0.25 * k as f64;
            assert_eq!(seg.value_at(theta), -2.5);
        }
        assert_eq!(seg.sup_norm(), 2.5);
    }

    #[test]
    fn segment_linear_interpolation_is_exact_on_linear_data() {
        // y(s) = s sampled with dt = 0.5; interpolation of linear data is exact.
        let values: Vec<f64> = (0..=6).map(|j| -1.0 + 0.5 * j as f64).collect();
        let traj = Trajectory::from_values(0.0, 0.5, 1.0, values).unwrap();
        let seg = traj.segment_at(2.0).unwrap();
        assert!((seg.value_at(-0.25) - 1.75).abs() <= 1e-15);
        assert_eq!(seg.value_at(0.0), 2.0);
    }

    #[test]
    fn segment_sup_norm_against_dense_oracle() {
        // y(s) = sin(s) on [-1, 3], window [2, 3]; a 10x denser scan of the
        // interpolant must not exceed the discrete node max by more than the
        // interpolation error bound dt^2 max|y''| / 8.
        let dt = 0.1;
        let values: Vec<f64> = (0..=40).map(|j| (-1.0 + dt * j as f64).sin()).collect();
        let traj = Trajectory::from_values(0.0, dt, 1.0, values).unwrap();
        let seg = traj.segment_at(3.0).unwrap();
        let node_max = seg.sup_norm();
        let mut dense_max: f64 = 0.0;
        for k in 0..=100 {
            let t = 2.0 + 0.01 * k as f64;
            dense_max = dense_max.max(t.sin().abs());
        }
        let bound = dt * dt / 8.0; // max |y''| = 1 for sin
        assert!(
            (dense_max - node_max).abs() <= bound,
            "node max {node_max}, dense max {dense_max}"
        );
    }

    #[test]
    fn segment_rejects_out_of_range_anchor() {
        let traj = Trajectory::from_history(0.0, 0.25, 1.0, &const_phi(0.0), 0).unwrap();
        assert!(traj.segment_at(-0.5).is_err());
        assert!(traj.segment_at(0.5).is_err());
        assert!(traj.segment_at(0.0).is_ok());
    }

    #[test]
    fn sup_norm_dominates_every_node_value() {
        let phi = HistoryFunction::from_fn(|t| (3.0 * t).cos() + 0.5 * t);
        let traj = Trajectory::from_history(1.0, 0.125, 1.0, &phi, 0).unwrap();
        let seg = traj.segment_at(1.0).unwrap();
        let sup = seg.sup_norm();
        for k in 0..=8 {
            let theta = -1.0 + 0.125 * k as f64;
            assert!(sup >= seg.value_at(theta).abs() - 1e-15);
        }
    }

    #[test]
    fn saturated_sine_rhs_values() {
        let traj = Trajectory::from_history(0.0, 0.25, 1.0, &const_phi(0.0), 0).unwrap();
        let seg = traj.segment_at(0.0).unwrap();
        // sin^4(0) = 0 leaves the +1 offset, at any t.
        assert_eq!(SaturatedSineRhs.eval(0.0, &seg), 1.0);
        assert_eq!(SaturatedSineRhs.eval(17.3, &seg), 1.0);

        let traj = Trajectory::from_history(
            0.0,
            0.25,
            1.0,
            &const_phi(std::f64::consts::FRAC_PI_2),
            0,
        )
        .unwrap();
        let seg = traj.segment_at(0.0).unwrap();
        // gain at t = 0 is exactly 1/16.
        assert!((SaturatedSineRhs.eval(0.0, &seg) - 1.0625).abs() <= 1e-15);
    }

    #[test]
    fn saturated_sine_rhs_lipschitz_sampling() {
        // |f(t, x_t) - f(t, y_t)| <= 0.5 |x(t-1) - y(t-1)| over random pairs.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..1000 {
            let t = 10.0 * next();
            let a = 8.0 * next() - 4.0;
            let b = 8.0 * next() - 4.0;
            let ta = Trajectory::from_history(0.0, 0.5, 1.0, &const_phi(a), 0).unwrap();
            let tb = Trajectory::from_history(0.0, 0.5, 1.0, &const_phi(b), 0).unwrap();
            let fa = SaturatedSineRhs.eval(t, &ta.segment_at(0.0).unwrap());
            let fb = SaturatedSineRhs.eval(t, &tb.segment_at(0.0).unwrap());
            assert!((fa - fb).abs() <= 0.5 * (a - b).abs() + 1e-15);
        }
    }

    #[test]
    fn saturated_delay_rhs_values() {
        let traj = Trajectory::from_history(0.0, 0.25, 1.0, &const_phi(0.0), 0).unwrap();
        assert_eq!(SaturatedDelayRhs.eval(3.0, &traj.segment_at(0.0).unwrap()), 0.0);

        let traj = Trajectory::from_history(0.0, 0.25, 1.0, &const_phi(1.0), 0).unwrap();
        let f = SaturatedDelayRhs.eval(0.0, &traj.segment_at(0.0).unwrap());
        assert!((f - 5.0).abs() <= 1e-15);
    }

    #[test]
    fn saturated_delay_rhs_growth_bound() {
        let mut state = 0x2545f4914f6cdd1du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..1000 {
            let t = 40.0 * next();
            let u = 20.0 * next() - 10.0;
            let traj = Trajectory::from_history(0.0, 0.5, 1.0, &const_phi(u), 0).unwrap();
            let f = SaturatedDelayRhs.eval(t, &traj.segment_at(0.0).unwrap());
            assert!(f.abs() <= SaturatedDelayRhs::growth_gain(t) * u.abs() + 1e-15);
        }
    }

    proptest::proptest! {
        #[test]
        fn value_at_matches_nodes_exactly(
            c0 in -5.0f64..5.0,
            c1 in -5.0f64..5.0,
            steps in 1usize..40,
        ) {
            let phi = HistoryFunction::from_fn(move |t| c0 + c1 * t);
            let dt = 1.0 / steps as f64;
            let traj = Trajectory::from_history(0.5, dt, 1.0, &phi, 0).unwrap();
            for j in 0..traj.len() {
                let t = traj.time(j);
                proptest::prop_assert_eq!(traj.value_at(t), traj.values()[j]);
            }
        }
    }
}
