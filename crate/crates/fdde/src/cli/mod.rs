//! Experiment runner behind the `fdde` binary: declarative JSON configs,
//! CSV artifacts, a plain-text report, and a closed-form self-test suite.

mod config;
mod runner;
mod selftest;

pub use config::{
    apply_overrides, load_config, AnalysisSpec, BuiltinProblem, ConfigError, ExperimentConfig,
    Overrides, ProblemSpec, ResolvedExperiment, RhsSpec, SolverSpec,
};
pub use runner::{read_report, run_experiment, RunError, RunSummary};
pub use selftest::{selftest, CheckResult, SelftestReport};
