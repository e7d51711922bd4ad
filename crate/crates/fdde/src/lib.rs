//! Solvers and stability diagnostics for delay differential equations of the
//! exponentially weighted Caputo form
//!
//! ```text
//! D^a [y(t) e^{bt}] = f(t, y_t) e^{bt},   t >= t0,   0 < a < 1,  b > 0,
//! y(t) = phi(t),                          t0 - h <= t <= t0,
//! ```
//!
//! where `y_t(theta) = y(t + theta)` on `[-h, 0]` is the history segment seen
//! by the right-hand side. Every computation runs through the equivalent
//! Volterra integral equation
//!
//! ```text
//! y(t) = y(t0) e^{-b(t-t0)}
//!      + (1/Gamma(a)) * Int_{t0}^{t} (t-s)^{a-1} e^{-b(t-s)} f(s, y_s) ds,
//! ```
//!
//! discretized with product-integration weights that treat the weakly
//! singular kernel factor exactly.
//!
//! Two independent solution routes are provided and cross-check each other:
//! a time-marching predictor-corrector ([`solver::solve_predictor_corrector`])
//! and global Picard iteration of the solution operator
//! ([`solver::solve_picard`]). The [`analysis`] module turns the qualitative
//! stability theory into numbers: the contraction bound, the singular-kernel
//! Gronwall envelope, empirical Lipschitz probes, and an ensemble harness
//! that measures how fast solutions started from different histories
//! collapse onto each other.
//!
//! The [`cli`] module drives experiments from a JSON config and writes CSV
//! trajectories plus a plain-text report; the `fdde` binary is a thin wrapper
//! around it.

pub mod analysis;
pub mod cli;
pub mod model;
pub mod quad;
pub mod solver;
pub mod specfun;

pub use model::{FdeProblem, HistoryFunction, RhsField, SegmentView, Trajectory};
pub use solver::{Method, SolveResult, SolverConfig};
