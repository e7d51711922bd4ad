//! Declarative experiment configuration.
//!
//! A config is a single JSON document:
//!
//! ```json
//! {
//!   "problem": { "builtin": "example_4_1" },
//!   "phis": ["sin", "cos", "neg_cos", "const:1.5"],
//!   "solver": { "dt": 0.015625, "t_final": 10.0 },
//!   "analysis": { "eps_list": [0.1, 0.05, 0.01], "envelope": true, "seed": 0 },
//!   "output_dir": "out"
//! }
//! ```
//!
//! Problems are either one of the two built-in benchmarks or an inline
//! parameter set whose right-hand side comes from a fixed vocabulary
//! (`constant`, `linear`, `delay_linear`, or the builtins). Initial
//! histories come from the fixed vocabulary
//! `sin | cos | neg_cos | linear | const:<c>`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

use crate::model::{
    make_problem, ConstantRhs, DelayLinearRhs, FdeProblem, HistoryFunction, ModelError, RhsField,
    SaturatedDelayRhs, SaturatedSineRhs, TimeLinearRhs,
};
use crate::solver::{Method, SolverConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config is not valid JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unknown builtin problem `{0}` (expected `example_4_1` or `example_4_2`)")]
    UnknownBuiltin(String),
    #[error("unknown initial function `{0}` (expected sin, cos, neg_cos, linear, or const:<c>)")]
    UnknownPhi(String),
    #[error("at least one initial function is required")]
    NoPhis,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid value: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub phis: Vec<String>,
    pub solver: SolverSpec,
    #[serde(default)]
    pub analysis: AnalysisSpec,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ProblemSpec {
    Builtin {
        builtin: String,
    },
    Inline {
        alpha: f64,
        beta: f64,
        t0: f64,
        h: f64,
        rhs: RhsSpec,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RhsSpec {
    Example41,
    Example42,
    Constant { value: f64 },
    Linear { offset: f64, slope: f64 },
    DelayLinear { gain: f64 },
}

impl RhsSpec {
    fn build(&self) -> Arc<dyn RhsField> {
        match *self {
            RhsSpec::Example41 => Arc::new(SaturatedSineRhs),
            RhsSpec::Example42 => Arc::new(SaturatedDelayRhs),
            RhsSpec::Constant { value } => Arc::new(ConstantRhs(value)),
            RhsSpec::Linear { offset, slope } => Arc::new(TimeLinearRhs { offset, slope }),
            RhsSpec::DelayLinear { gain } => Arc::new(DelayLinearRhs { gain }),
        }
    }

    fn label(&self) -> String {
        match self {
            RhsSpec::Example41 => "example_4_1".into(),
            RhsSpec::Example42 => "example_4_2".into(),
            RhsSpec::Constant { value } => format!("constant({value})"),
            RhsSpec::Linear { offset, slope } => format!("linear({offset}, {slope})"),
            RhsSpec::DelayLinear { gain } => format!("delay_linear({gain})"),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_method")]
    pub method: Method,
    pub dt: f64,
    #[serde(alias = "T")]
    pub t_final: f64,
    #[serde(default = "default_picard_tol")]
    pub picard_tol: f64,
    #[serde(default = "default_picard_max_iter")]
    pub picard_max_iter: usize,
    #[serde(default = "default_corrector_sweeps")]
    pub corrector_sweeps: usize,
}

fn default_method() -> Method {
    Method::PredictorCorrector
}

fn default_picard_tol() -> f64 {
    1e-10
}

fn default_picard_max_iter() -> usize {
    200
}

fn default_corrector_sweeps() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    #[serde(default = "default_eps_list")]
    pub eps_list: Vec<f64>,
    #[serde(default = "default_envelope")]
    pub envelope: bool,
    #[serde(default)]
    pub seed: u64,
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        AnalysisSpec { eps_list: default_eps_list(), envelope: true, seed: 0 }
    }
}

fn default_eps_list() -> Vec<f64> {
    vec![0.1, 0.05, 0.01]
}

fn default_envelope() -> bool {
    true
}

/// Command-line overrides applied on top of a parsed config.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub method: Option<Method>,
    pub seed: Option<u64>,
}

pub fn apply_overrides(config: &mut ExperimentConfig, overrides: &Overrides) {
    if let Some(dt) = overrides.dt {
        config.solver.dt = dt;
    }
    if let Some(t_final) = overrides.t_final {
        config.solver.t_final = t_final;
    }
    if let Some(method) = overrides.method {
        config.solver.method = method;
    }
    if let Some(seed) = overrides.seed {
        config.analysis.seed = seed;
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinProblem {
    Example41,
    Example42,
}

impl BuiltinProblem {
    pub fn name(&self) -> &'static str {
        match self {
            BuiltinProblem::Example41 => "example_4_1",
            BuiltinProblem::Example42 => "example_4_2",
        }
    }
}

/// A config with every name resolved and every range validated, ready to run.
pub struct ResolvedExperiment {
    /// Template problem; members swap in their own history.
    pub problem: FdeProblem,
    pub rhs_label: String,
    pub builtin: Option<BuiltinProblem>,
    /// `(name, phi)` pairs; names are unique and filesystem-safe.
    pub phis: Vec<(String, HistoryFunction)>,
    pub solver: SolverConfig,
    pub eps_list: Vec<f64>,
    pub envelope: bool,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn resolve(&self) -> Result<ResolvedExperiment, ConfigError> {
        if self.phis.is_empty() {
            return Err(ConfigError::NoPhis);
        }
        let mut phis = Vec::with_capacity(self.phis.len());
        for token in &self.phis {
            phis.push(parse_phi(token)?);
        }
        dedupe_names(&mut phis);

        let (rhs, rhs_label, builtin, alpha, beta, t0, h) = match &self.problem {
            ProblemSpec::Builtin { builtin } => match builtin.as_str() {
                "example_4_1" => (
                    RhsSpec::Example41.build(),
                    "example_4_1".to_string(),
                    Some(BuiltinProblem::Example41),
                    0.5,
                    1.0,
                    0.0,
                    1.0,
                ),
                "example_4_2" => (
                    RhsSpec::Example42.build(),
                    "example_4_2".to_string(),
                    Some(BuiltinProblem::Example42),
                    0.5,
                    1.0,
                    0.0,
                    1.0,
                ),
                other => return Err(ConfigError::UnknownBuiltin(other.to_string())),
            },
            ProblemSpec::Inline { alpha, beta, t0, h, rhs } => {
                let builtin = match rhs {
                    RhsSpec::Example41 => Some(BuiltinProblem::Example41),
                    RhsSpec::Example42 => Some(BuiltinProblem::Example42),
                    _ => None,
                };
                (rhs.build(), rhs.label(), builtin, *alpha, *beta, *t0, *h)
            }
        };

        let problem = make_problem(alpha, beta, t0, h, rhs, phis[0].1.clone())?;

        for &eps in &self.analysis.eps_list {
            if !(eps > 0.0) {
                return Err(ConfigError::Invalid(format!(
                    "eps_list entries must be positive, got {eps}"
                )));
            }
        }

        Ok(ResolvedExperiment {
            problem,
            rhs_label,
            builtin,
            phis,
            solver: SolverConfig {
                method: self.solver.method,
                dt: self.solver.dt,
                t_final: self.solver.t_final,
                picard_tol: self.solver.picard_tol,
                picard_max_iter: self.solver.picard_max_iter,
                corrector_sweeps: self.solver.corrector_sweeps,
            },
            eps_list: self.analysis.eps_list.clone(),
            envelope: self.analysis.envelope,
            seed: self.analysis.seed,
            output_dir: self.output_dir.clone(),
        })
    }
}

/// `sin | cos | neg_cos | linear | const:<c>` -> named history function.
pub fn parse_phi(token: &str) -> Result<(String, HistoryFunction), ConfigError> {
    match token {
        "sin" => Ok(("sin".into(), HistoryFunction::from_fn(f64::sin))),
        "cos" => Ok(("cos".into(), HistoryFunction::from_fn(f64::cos))),
        "neg_cos" => Ok(("neg_cos".into(), HistoryFunction::from_fn(|t: f64| -t.cos()))),
        "linear" => Ok(("linear".into(), HistoryFunction::from_fn(|t: f64| t))),
        other => {
            if let Some(rest) = other.strip_prefix("const:") {
                let c: f64 = rest
                    .parse()
                    .map_err(|_| ConfigError::UnknownPhi(other.to_string()))?;
                if !c.is_finite() {
                    return Err(ConfigError::UnknownPhi(other.to_string()));
                }
                Ok((format!("const_{c}"), HistoryFunction::constant(c)))
            } else {
                Err(ConfigError::UnknownPhi(other.to_string()))
            }
        }
    }
}

/// Repeated names (e.g. the same phi twice) get an index suffix so each
/// member maps to a distinct trajectory file.
fn dedupe_names(phis: &mut [(String, HistoryFunction)]) {
    let mut seen = std::collections::HashSet::new();
    for entry in phis.iter_mut() {
        if !seen.insert(entry.0.clone()) {
            let mut k = 1;
            loop {
                let candidate = format!("{}_dup{k}", entry.0);
                if seen.insert(candidate.clone()) {
                    entry.0 = candidate;
                    break;
                }
                k += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json(problem: &str, phis: &str) -> String {
        format!(
            r#"{{
                "problem": {problem},
                "phis": {phis},
                "solver": {{ "dt": 0.25, "t_final": 4.0 }},
                "output_dir": "out"
            }}"#
        )
    }

    #[test]
    fn builtin_config_resolves() {
        let cfg: ExperimentConfig = serde_json::from_str(&minimal_json(
            r#"{ "builtin": "example_4_1" }"#,
            r#"["sin", "cos", "neg_cos", "const:1.5"]"#,
        ))
        .unwrap();
        let resolved = cfg.resolve().unwrap();
        assert_eq!(resolved.builtin, Some(BuiltinProblem::Example41));
        assert_eq!(resolved.problem.alpha(), 0.5);
        assert_eq!(resolved.phis.len(), 4);
        assert_eq!(resolved.phis[3].0, "const_1.5");
        assert_eq!(resolved.solver.method, Method::PredictorCorrector);
    }

    #[test]
    fn inline_config_resolves() {
        let cfg: ExperimentConfig = serde_json::from_str(&minimal_json(
            r#"{ "alpha": 0.4, "beta": 2.0, "t0": 0.0, "h": 1.0,
                 "rhs": { "kind": "delay_linear", "gain": 0.3 } }"#,
            r#"["linear", "const:-2"]"#,
        ))
        .unwrap();
        let resolved = cfg.resolve().unwrap();
        assert!(resolved.builtin.is_none());
        assert_eq!(resolved.rhs_label, "delay_linear(0.3)");
        assert_eq!(resolved.problem.beta(), 2.0);
    }

    #[test]
    fn rejects_unknown_builtin_and_phi() {
        let cfg: ExperimentConfig = serde_json::from_str(&minimal_json(
            r#"{ "builtin": "example_9_9" }"#,
            r#"["sin"]"#,
        ))
        .unwrap();
        assert!(matches!(cfg.resolve(), Err(ConfigError::UnknownBuiltin(_))));

        let cfg: ExperimentConfig = serde_json::from_str(&minimal_json(
            r#"{ "builtin": "example_4_1" }"#,
            r#"["tanh"]"#,
        ))
        .unwrap();
        assert!(matches!(cfg.resolve(), Err(ConfigError::UnknownPhi(_))));
    }

    #[test]
    fn rejects_empty_phis() {
        let cfg: ExperimentConfig = serde_json::from_str(&minimal_json(
            r#"{ "builtin": "example_4_1" }"#,
            r#"[]"#,
        ))
        .unwrap();
        assert!(matches!(cfg.resolve(), Err(ConfigError::NoPhis)));
    }

    #[test]
    fn rejects_invalid_inline_ranges() {
        let cfg: ExperimentConfig = serde_json::from_str(&minimal_json(
            r#"{ "alpha": 1.2, "beta": 1.0, "t0": 0.0, "h": 1.0,
                 "rhs": { "kind": "constant", "value": 0.0 } }"#,
            r#"["sin"]"#,
        ))
        .unwrap();
        assert!(matches!(cfg.resolve(), Err(ConfigError::Model(_))));
    }

    #[test]
    fn duplicate_phi_names_are_suffixed() {
        let cfg: ExperimentConfig = serde_json::from_str(&minimal_json(
            r#"{ "builtin": "example_4_1" }"#,
            r#"["sin", "sin", "sin"]"#,
        ))
        .unwrap();
        let resolved = cfg.resolve().unwrap();
        let names: Vec<&str> = resolved.phis.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["sin", "sin_dup1", "sin_dup2"]);
    }

    #[test]
    fn overrides_replace_solver_fields() {
        let mut cfg: ExperimentConfig = serde_json::from_str(&minimal_json(
            r#"{ "builtin": "example_4_1" }"#,
            r#"["sin", "cos"]"#,
        ))
        .unwrap();
        apply_overrides(
            &mut cfg,
            &Overrides {
                dt: Some(0.125),
                t_final: Some(8.0),
                method: Some(Method::Picard),
                seed: Some(7),
            },
        );
        assert_eq!(cfg.solver.dt, 0.125);
        assert_eq!(cfg.solver.t_final, 8.0);
        assert_eq!(cfg.solver.method, Method::Picard);
        assert_eq!(cfg.analysis.seed, 7);
    }

    #[test]
    fn t_alias_is_accepted() {
        let text = r#"{
            "problem": { "builtin": "example_4_2" },
            "phis": ["linear", "cos"],
            "solver": { "dt": 0.5, "T": 6.0 },
            "output_dir": "out"
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.solver.t_final, 6.0);
    }
}
