//! Closed-form oracle suite runnable from the command line.
//!
//! Every check compares the library against a value known analytically:
//! gamma anchors, quadrature exactness, the unforced decay solution, the
//! constant-forcing incomplete-gamma solution, and agreement between the
//! two solver routes. `gamma_perturbation` is a fault-injection hook: a
//! nonzero offset is added to the gamma values under test so the harness
//! itself can be shown to catch a broken build.

use std::sync::Arc;

use crate::model::{make_problem, ConstantRhs, HistoryFunction};
use crate::quad::product_trapezoid_weights;
use crate::solver::{solve, solve_picard, Method, SolverConfig};
use crate::specfun::{gamma, lower_incomplete_gamma};

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct SelftestReport {
    pub checks: Vec<CheckResult>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub fn selftest(gamma_perturbation: f64) -> SelftestReport {
    let mut checks = Vec::new();

    checks.push(gamma_anchors(gamma_perturbation));
    checks.push(incomplete_gamma_closed_forms());
    checks.push(quadrature_constant_exactness());
    checks.push(quadrature_linear_exactness());
    checks.push(unforced_decay());
    checks.push(constant_forcing_oracle());
    checks.push(solver_cross_agreement());

    SelftestReport { checks }
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

fn gamma_anchors(perturbation: f64) -> CheckResult {
    let anchors = [
        (1.0, 1.0),
        (0.5, 1.7724538509055160),
        (1.5, 0.8862269254527580),
    ];
    let mut worst = 0.0f64;
    for (x, want) in anchors {
        let got = gamma(x).map(|g| g + perturbation).unwrap_or(f64::NAN);
        worst = worst.max((got - want).abs() / want);
    }
    check(
        "gamma_anchors",
        worst <= 1e-12,
        format!("max relative error {worst:.3e} (tolerance 1e-12)"),
    )
}

fn incomplete_gamma_closed_forms() -> CheckResult {
    let mut worst = 0.0f64;
    for x in [0.25f64, 1.0, 4.0, 12.0] {
        let want = 1.0 - (-x).exp();
        let got = lower_incomplete_gamma(1.0, x).unwrap_or(f64::NAN);
        worst = worst.max((got - want).abs());
    }
    let origin = lower_incomplete_gamma(0.5, 0.0).unwrap_or(f64::NAN);
    let saturated = lower_incomplete_gamma(0.5, 60.0).unwrap_or(f64::NAN);
    let gamma_half = gamma(0.5).unwrap_or(f64::NAN);
    let ok = worst <= 1e-12 && origin == 0.0 && (saturated - gamma_half).abs() <= 1e-11;
    check(
        "incomplete_gamma_closed_forms",
        ok,
        format!("a=1 worst error {worst:.3e}, saturation gap {:.3e}", (saturated - gamma_half).abs()),
    )
}

fn quadrature_constant_exactness() -> CheckResult {
    let dt = 0.0625;
    let mut worst = 0.0f64;
    for alpha in [0.25, 0.5, 0.75] {
        for n in [1usize, 10, 100] {
            let row = match product_trapezoid_weights(alpha, dt, n) {
                Ok(r) => r,
                Err(e) => return check("quadrature_constant_exactness", false, e.to_string()),
            };
            let sum: f64 = row.iter().sum();
            let exact = (n as f64 * dt).powf(alpha) / alpha;
            worst = worst.max((sum - exact).abs() / exact);
        }
    }
    check(
        "quadrature_constant_exactness",
        worst <= 1e-12,
        format!("max relative defect {worst:.3e}"),
    )
}

fn quadrature_linear_exactness() -> CheckResult {
    let dt = 0.125;
    let (a, b) = (0.7, -1.3);
    let mut worst = 0.0f64;
    for alpha in [0.25, 0.5, 0.75] {
        let n = 32;
        let row = match product_trapezoid_weights(alpha, dt, n) {
            Ok(r) => r,
            Err(e) => return check("quadrature_linear_exactness", false, e.to_string()),
        };
        let quad: f64 = row
            .iter()
            .enumerate()
            .map(|(j, w)| w * (a + b * j as f64 * dt))
            .sum();
        let tn = n as f64 * dt;
        let exact =
            (a + b * tn) * tn.powf(alpha) / alpha - b * tn.powf(alpha + 1.0) / (alpha + 1.0);
        worst = worst.max((quad - exact).abs() / exact.abs().max(1.0));
    }
    check(
        "quadrature_linear_exactness",
        worst <= 1e-10,
        format!("max relative defect {worst:.3e}"),
    )
}

fn unforced_decay() -> CheckResult {
    let problem = match make_problem(
        0.5,
        1.0,
        0.0,
        1.0,
        Arc::new(ConstantRhs(0.0)),
        HistoryFunction::constant(1.5),
    ) {
        Ok(p) => p,
        Err(e) => return check("unforced_decay", false, e.to_string()),
    };
    let mut worst = 0.0f64;
    for method in [Method::PredictorCorrector, Method::Picard] {
        let config = SolverConfig::new(method, 2f64.powi(-6), 10.0);
        let out = match solve(&problem, &config) {
            Ok(o) => o,
            Err(e) => return check("unforced_decay", false, e.to_string()),
        };
        let traj = &out.trajectory;
        let d = traj.delay_steps();
        for n in 0..traj.len() - d {
            let t = traj.time(d + n);
            worst = worst.max((traj.values()[d + n] - 1.5 * (-t).exp()).abs());
        }
    }
    check("unforced_decay", worst <= 1e-12, format!("max abs error {worst:.3e}"))
}

fn constant_forcing_oracle() -> CheckResult {
    let problem = match make_problem(
        0.5,
        1.0,
        0.0,
        1.0,
        Arc::new(ConstantRhs(1.0)),
        HistoryFunction::constant(0.0),
    ) {
        Ok(p) => p,
        Err(e) => return check("constant_forcing_oracle", false, e.to_string()),
    };
    let config = SolverConfig::new(Method::PredictorCorrector, 2f64.powi(-8), 2.0);
    let out = match solve(&problem, &config) {
        Ok(o) => o,
        Err(e) => return check("constant_forcing_oracle", false, e.to_string()),
    };
    let traj = &out.trajectory;
    let d = traj.delay_steps();
    let ga = gamma(0.5).unwrap();
    let mut worst = 0.0f64;
    for n in 1..traj.len() - d {
        let t = traj.time(d + n);
        let exact = lower_incomplete_gamma(0.5, t).unwrap() / ga;
        worst = worst.max((traj.values()[d + n] - exact).abs());
    }
    check("constant_forcing_oracle", worst <= 1e-4, format!("sup error {worst:.3e}"))
}

fn solver_cross_agreement() -> CheckResult {
    let problem = match make_problem(
        0.5,
        1.0,
        0.0,
        1.0,
        crate::model::example_4_1_rhs(),
        HistoryFunction::constant(1.5),
    ) {
        Ok(p) => p,
        Err(e) => return check("solver_cross_agreement", false, e.to_string()),
    };
    let config = SolverConfig::new(Method::PredictorCorrector, 2f64.powi(-6), 5.0);
    let pece = match solve(&problem, &config) {
        Ok(o) => o,
        Err(e) => return check("solver_cross_agreement", false, e.to_string()),
    };
    let picard = match solve_picard(&problem, &config.with_method(Method::Picard)) {
        Ok(o) => o,
        Err(e) => return check("solver_cross_agreement", false, e.to_string()),
    };
    if !picard.diagnostics.converged {
        return check("solver_cross_agreement", false, "picard did not converge".into());
    }
    let sup = pece
        .trajectory
        .values()
        .iter()
        .zip(picard.trajectory.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    check("solver_cross_agreement", sup <= 1e-4, format!("sup distance {sup:.3e}"))
}
