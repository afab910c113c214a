//! Experiment orchestration: configuration, paired comparison runs and
//! CSV/JSON export.

mod compare;
mod config;
mod export;
mod runlog;

pub use compare::{
    compare, run_root, shared_initial_population, summarize_runs, winner, AlgorithmOutcome, AlgorithmSummary,
    ComparisonReport, ComparisonSummary, PairedRun, RunSummary,
};
pub use config::{AlgorithmSection, Budget, BudgetUnit, ExperimentConfig, ObjectiveSection};
pub use export::{
    convergence_path, export_report, export_run, final_population_path, history_path, read_convergence,
    read_individuals, read_report, write_trace, ConvergenceRow, IndividualRow, ReportFile,
};
pub use runlog::{mean_fitness, GenerationRecord, RunLog};

use crate::error::Result;
use crate::optimizers::AlgorithmKind;

/// A single run of one algorithm, reported like a one-run comparison.
pub fn optimize(config: &ExperimentConfig, algorithm: AlgorithmKind) -> Result<ComparisonReport> {
    let mut cfg = config.clone();
    cfg.comparison_runs = 1;
    cfg.de.enabled = algorithm == AlgorithmKind::De;
    cfg.ga.enabled = algorithm == AlgorithmKind::Ga;
    cfg.random_search.enabled = algorithm == AlgorithmKind::RandomSearch;
    compare(&cfg)
}
