//! Executes a resolved experiment and writes its artifacts.
//!
//! Per run: one `traj_<phi>.csv` per ensemble member (header `t,y`),
//! `pairwise.csv` with the distance curves, and a sectioned `report.txt`.
//! Floats are printed with Rust's shortest round-trip formatting, so
//! re-reading a CSV reproduces the in-memory values exactly and identical
//! configs produce byte-identical files. On any failure the partial
//! outputs are removed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::analysis::{
    self, estimate_lipschitz, fit_gronwall_k, stability_harness, AnalysisError, ProbeSpec,
    StabilityOutcome,
};
use crate::model::SaturatedDelayRhs;
use crate::quad::{kernel_decay_check, QuadError};
use crate::solver::{self, SolveError};
use crate::specfun;

use super::config::{BuiltinProblem, ConfigError, ExperimentConfig, ResolvedExperiment};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub trajectory_files: Vec<PathBuf>,
    pub pairwise_file: PathBuf,
    pub report_file: PathBuf,
    pub report_text: String,
}

/// Runs the experiment a config describes: solve the ensemble, reduce the
/// stability report, and persist CSVs plus `report.txt`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunSummary, RunError> {
    let resolved = config.resolve()?;
    let mut written: Vec<PathBuf> = Vec::new();
    match run_resolved(&resolved, &mut written) {
        Ok(summary) => Ok(summary),
        Err(err) => {
            for path in written.iter().rev() {
                let _ = fs::remove_file(path);
            }
            Err(err)
        }
    }
}

fn run_resolved(
    exp: &ResolvedExperiment,
    written: &mut Vec<PathBuf>,
) -> Result<RunSummary, RunError> {
    let phis: Vec<_> = exp.phis.iter().map(|(_, phi)| phi.clone()).collect();
    let outcome = stability_harness(&exp.problem, &phis, &exp.solver, &exp.eps_list)?;

    fs::create_dir_all(&exp.output_dir)
        .map_err(|source| RunError::Io { path: exp.output_dir.clone(), source })?;

    let mut trajectory_files = Vec::new();
    for ((name, _), member) in exp.phis.iter().zip(&outcome.members) {
        let path = exp.output_dir.join(format!("traj_{name}.csv"));
        let mut body = String::from("t,y\n");
        let traj = &member.trajectory;
        for j in 0..traj.len() {
            body.push_str(&format!("{},{}\n", traj.time(j), traj.values()[j]));
        }
        write_file(&path, &body, written)?;
        trajectory_files.push(path);
    }

    let pairwise_file = exp.output_dir.join("pairwise.csv");
    write_file(&pairwise_file, &pairwise_csv(exp, &outcome), written)?;

    let report_text = build_report(exp, &outcome)?;
    let report_file = exp.output_dir.join("report.txt");
    write_file(&report_file, &report_text, written)?;

    Ok(RunSummary {
        output_dir: exp.output_dir.clone(),
        trajectory_files,
        pairwise_file,
        report_file,
        report_text,
    })
}

fn write_file(path: &Path, content: &str, written: &mut Vec<PathBuf>) -> Result<(), RunError> {
    let mut file = fs::File::create(path)
        .map_err(|source| RunError::Io { path: path.to_path_buf(), source })?;
    written.push(path.to_path_buf());
    file.write_all(content.as_bytes())
        .map_err(|source| RunError::Io { path: path.to_path_buf(), source })?;
    Ok(())
}

fn pairwise_csv(exp: &ResolvedExperiment, outcome: &StabilityOutcome) -> String {
    let report = &outcome.report;
    let mut header = String::from("t,max_pairwise");
    for &(i, j) in &report.pair_labels {
        header.push_str(&format!(",pair_{}_{}", exp.phis[i].0, exp.phis[j].0));
    }
    header.push('\n');

    let mut body = header;
    for (idx, &t) in report.times.iter().enumerate() {
        body.push_str(&format!("{t},{}", report.max_pairwise[idx]));
        for dist in &report.pair_distances {
            body.push_str(&format!(",{}", dist[idx]));
        }
        body.push('\n');
    }
    body
}

fn build_report(exp: &ResolvedExperiment, outcome: &StabilityOutcome) -> Result<String, RunError> {
    let problem = &exp.problem;
    let mut out = String::new();

    out.push_str("# problem\n");
    out.push_str(&format!("rhs = {}\n", exp.rhs_label));
    out.push_str(&format!("alpha = {}\n", problem.alpha()));
    out.push_str(&format!("beta = {}\n", problem.beta()));
    out.push_str(&format!("t0 = {}\n", problem.t0()));
    out.push_str(&format!("h = {}\n", problem.delay()));
    let names: Vec<&str> = exp.phis.iter().map(|(n, _)| n.as_str()).collect();
    out.push_str(&format!("members = {}\n", names.join(", ")));

    out.push_str("\n# solver\n");
    out.push_str(&format!("method = {}\n", exp.solver.method));
    out.push_str(&format!("dt = {}\n", exp.solver.dt));
    out.push_str(&format!("t_final = {}\n", exp.solver.t_final));
    out.push_str(&format!("corrector_sweeps = {}\n", exp.solver.corrector_sweeps));

    out.push_str("\n# contraction\n");
    let hint = problem.rhs().lipschitz_hint();
    match hint {
        Some(l) => {
            let bound = analysis::contraction_bound(
                l,
                problem.alpha(),
                problem.beta(),
                problem.t0(),
                problem.delay(),
            )?;
            out.push_str(&format!("lipschitz = {l}\n"));
            out.push_str(&format!("bound = {bound}\n"));
            if bound < 1.0 {
                out.push_str("unique_solution = yes (bound < 1)\n");
            } else {
                out.push_str(
                    "unique_solution = not applicable (bound >= 1; sublinear-growth route)\n",
                );
            }
        }
        None => out.push_str("lipschitz = unknown\n"),
    }

    // Decay table of the growth gain's weighted convolution; only the
    // second builtin carries a decaying gain worth tabulating.
    if exp.builtin == Some(BuiltinProblem::Example42) {
        out.push_str("\n# kernel_decay\n");
        let dt = exp.solver.dt;
        let horizon = exp.solver.t_final.max(problem.t0() + 1.0);
        let n = ((horizon - problem.t0()) / dt).round() as usize;
        let k: Vec<f64> = (0..=n)
            .map(|j| SaturatedDelayRhs::growth_gain(problem.t0() + j as f64 * dt))
            .collect();
        // Tabulate roughly once per unit time, snapped onto the grid.
        let stride = (1.0 / dt).round().max(1.0) as usize;
        let times: Vec<f64> = (1..=n / stride)
            .map(|m| problem.t0() + (m * stride) as f64 * dt)
            .collect();
        let front = 10.0 * specfun::gamma(0.25).expect("positive argument")
            / specfun::gamma(0.75).expect("positive argument");
        let report = kernel_decay_check(
            problem.alpha(),
            problem.beta(),
            problem.t0(),
            dt,
            &k,
            &times,
            1e-2,
        )?;
        out.push_str("t, value, power_law_bound\n");
        for &(t, v) in &report.points {
            out.push_str(&format!("{t}, {v}, {}\n", front * t.powf(-0.25)));
        }
        out.push_str(&format!("decaying_below_threshold = {}\n", report.decaying));
    }

    out.push_str("\n# lipschitz_probe\n");
    let mut probe = ProbeSpec::new(problem.delay());
    probe.seed = exp.seed;
    probe.t_range = (problem.t0(), exp.solver.t_final);
    let sampled = estimate_lipschitz(&**problem.rhs(), &probe);
    out.push_str(&format!(
        "sampled = {sampled} (probes = {}, seed = {})\n",
        probe.probes, probe.seed
    ));

    let report = &outcome.report;
    out.push_str("\n# stabilization\n");
    out.push_str("eps, T\n");
    for &(eps, t) in &report.t_of_eps {
        match t {
            Some(t) => out.push_str(&format!("{eps}, {t}\n")),
            None => out.push_str(&format!("{eps}, not reached\n")),
        }
    }

    out.push_str("\n# decay_fit\n");
    out.push_str(&format!("amplitude = {}\n", report.decay_fit.amplitude));
    out.push_str(&format!("rate = {}\n", report.decay_fit.rate));
    out.push_str(&format!("power_coeff = {}\n", report.decay_fit.power_coeff));

    if exp.envelope {
        if let Some(l) = hint {
            out.push_str("\n# gronwall\n");
            out.push_str("pair, fitted_K\n");
            for &(i, j) in &report.pair_labels {
                let k = fit_gronwall_k(
                    problem,
                    l,
                    &outcome.members[i].trajectory,
                    &outcome.members[j].trajectory,
                )?;
                out.push_str(&format!("{}/{}, {k}\n", exp.phis[i].0, exp.phis[j].0));
            }
        }
    }

    out.push_str("\n# members\n");
    out.push_str("member, residual, converged, iterations\n");
    for ((name, _), member) in exp.phis.iter().zip(&outcome.members) {
        let res = solver::residual(problem, &member.trajectory)?;
        out.push_str(&format!(
            "{name}, {res}, {}, {}\n",
            member.diagnostics.converged, member.diagnostics.iterations
        ));
    }

    Ok(out)
}

/// Re-reads `report.txt` from a previous run's output directory.
pub fn read_report(output_dir: &Path) -> Result<String, RunError> {
    let path = output_dir.join("report.txt");
    fs::read_to_string(&path).map_err(|source| RunError::Io { path, source })
}
