use fdde::model::{example_4_1_rhs, make_problem, ConstantRhs, HistoryFunction};
use fdde::solver::{solve, solve_picard, Method, SolverConfig};
use fdde::specfun::{gamma, lower_incomplete_gamma};
use std::sync::Arc;

fn main() {
    // constant forcing vs incomplete-gamma closed form at three resolutions
    let p = make_problem(0.5, 1.0, 0.0, 1.0, Arc::new(ConstantRhs(1.0)), HistoryFunction::constant(0.0)).unwrap();
    let ga = gamma(0.5).unwrap();
    let mut errs = Vec::new();
    for pow in [-8, -9, -10] {
        let config = SolverConfig::new(Method::PredictorCorrector, 2f64.powi(pow), 2.0);
        let out = solve(&p, &config).unwrap();
        let traj = &out.trajectory;
        let d = traj.delay_steps();
        let mut worst: f64 = 0.0;
        for n in 1..traj.len() - d {
            let t = traj.time(d + n);
            let exact = lower_incomplete_gamma(0.5, t).unwrap() / ga;
            worst = worst.max((traj.values()[d + n] - exact).abs());
        }
        println!("dt=2^{pow}: sup err = {worst:.4e}");
        errs.push(worst);
    }
    for w in errs.windows(2) {
        println!("  halving factor = {:.3}", w[0] / w[1]);
    }

    // PECE vs Picard on example 1
    let p1 = make_problem(0.5, 1.0, 0.0, 1.0, example_4_1_rhs(), HistoryFunction::constant(1.5)).unwrap();
    let config = SolverConfig::new(Method::PredictorCorrector, 2f64.powi(-6), 5.0);
    let pece = solve(&p1, &config).unwrap();
    let pic = solve_picard(&p1, &config.with_method(Method::Picard)).unwrap();
    let sup = pece.trajectory.values().iter().zip(pic.trajectory.values())
        .map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
    println!("pece vs picard sup = {sup:.4e}");
    println!("picard iterations = {}, converged = {}", pic.diagnostics.iterations, pic.diagnostics.converged);
    println!("ratios = {:?}", pic.diagnostics.contraction_ratios);
}
