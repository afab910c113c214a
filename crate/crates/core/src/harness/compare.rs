use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::runlog::RunLog;
use crate::diversity::DiversityStats;
use crate::error::Result;
use crate::objectives::LedgerSnapshot;
use crate::optimizers::{fitness_cmp, init_population, run, AlgorithmKind};
use crate::rng::RngStream;
use crate::space::Genome;

const SHARED_INIT_TAG: u64 = 0x5EED;

/// Root stream of paired run `run` under `master_seed`.
pub fn run_root(master_seed: u64, run: usize) -> RngStream {
    RngStream::new(master_seed).child(run as u64)
}

/// The initial population every algorithm in paired run `run` starts from.
pub fn shared_initial_population(config: &ExperimentConfig, run: usize) -> Result<Vec<Genome>> {
    let spec = config.objective_spec()?;
    let p = config.algorithms().first().map_or(0, |a| a.population_size());
    Ok(init_population(&spec.space, p, &run_root(config.master_seed, run).child(SHARED_INIT_TAG)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmOutcome {
    pub log: RunLog,
    /// Set when the run stopped on an error; the log holds what came before.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedRun {
    pub run: usize,
    pub initial_population: Vec<Genome>,
    pub outcomes: BTreeMap<AlgorithmKind, AlgorithmOutcome>,
}

impl PairedRun {
    pub fn failed(&self) -> bool {
        self.outcomes.values().any(|o| o.error.is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub best_fitness: Option<f64>,
    pub best_genome: Option<Genome>,
    pub final_avg_fitness: Option<f64>,
    pub final_diversity: Option<DiversityStats>,
    pub generations: usize,
    pub ledger: LedgerSnapshot,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run: usize,
    /// False if any algorithm of the pair failed; such a pair has no winner.
    pub valid: bool,
    /// Algorithm with the strictly lowest best fitness, if there is one.
    pub winner: Option<AlgorithmKind>,
    pub algorithms: BTreeMap<AlgorithmKind, AlgorithmSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub runs: Vec<RunSummary>,
    pub wins: BTreeMap<AlgorithmKind, usize>,
    pub ties: usize,
    pub invalid_runs: usize,
    /// DE and GA entries that were disabled in the config.
    pub absent: Vec<AlgorithmKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub objective: String,
    pub master_seed: u64,
    pub budget_design_evals: u64,
    pub replicates: usize,
    pub runs: Vec<PairedRun>,
    pub summary: ComparisonSummary,
}

/// Lowest best fitness among `best`, or `None` on a tie or if any is missing.
pub fn winner(best: &BTreeMap<AlgorithmKind, Option<f64>>) -> Option<AlgorithmKind> {
    let mut values: Vec<(AlgorithmKind, f64)> = Vec::new();
    for (k, v) in best {
        values.push((*k, (*v)?));
    }
    values.sort_by(|a, b| fitness_cmp(a.1, b.1));
    match values.as_slice() {
        [] => None,
        [only] => Some(only.0),
        [first, second, ..] => fitness_cmp(first.1, second.1).is_lt().then_some(first.0),
    }
}

fn summarize(outcome: &AlgorithmOutcome) -> AlgorithmSummary {
    let log = &outcome.log;
    let last = log.generations.last();
    AlgorithmSummary {
        best_fitness: log.best_fitness(),
        best_genome: log.best.as_ref().map(|b| b.genome.clone()),
        final_avg_fitness: last.map(|g| g.avg_fitness),
        final_diversity: last.map(|g| g.diversity.clone()),
        generations: log.generations.len(),
        ledger: log.ledger,
        error: outcome.error.clone(),
    }
}

pub fn summarize_runs(runs: &[PairedRun], enabled: &[AlgorithmKind]) -> ComparisonSummary {
    let mut wins: BTreeMap<AlgorithmKind, usize> = enabled.iter().map(|k| (*k, 0)).collect();
    let (mut ties, mut invalid_runs) = (0, 0);
    let summaries = runs
        .iter()
        .map(|pair| {
            let algorithms: BTreeMap<_, _> = pair.outcomes.iter().map(|(k, o)| (*k, summarize(o))).collect();
            let valid = !pair.failed();
            let win =
                if valid { winner(&algorithms.iter().map(|(k, s)| (*k, s.best_fitness)).collect()) } else { None };
            match (valid, win) {
                (false, _) => invalid_runs += 1,
                (true, Some(k)) => *wins.entry(k).or_default() += 1,
                (true, None) => ties += 1,
            }
            RunSummary { run: pair.run, valid, winner: win, algorithms }
        })
        .collect();
    let absent = [AlgorithmKind::De, AlgorithmKind::Ga].into_iter().filter(|k| !enabled.contains(k)).collect();
    ComparisonSummary { runs: summaries, wins, ties, invalid_runs, absent }
}

/// Runs every enabled algorithm `comparison_runs` times. Within a paired
/// run all algorithms share the initial population and the root stream,
/// so generation 0 is evaluated with identical replicate seeds. A failed
/// algorithm invalidates only its own pair.
pub fn compare(config: &ExperimentConfig) -> Result<ComparisonReport> {
    config.validate()?;
    let spec = config.objective_spec()?;
    let budget = config.budget.design_evals(spec.replicates);
    let algorithms = config.algorithms();
    let initial: Vec<Vec<Genome>> =
        (0..config.comparison_runs).map(|r| shared_initial_population(config, r)).collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize)> =
        (0..config.comparison_runs).flat_map(|r| (0..algorithms.len()).map(move |a| (r, a))).collect();
    let results: Vec<(usize, AlgorithmKind, AlgorithmOutcome)> = jobs
        .par_iter()
        .map(|&(r, a)| {
            let algorithm = &algorithms[a];
            let outcome = match run(algorithm, &spec, budget, &run_root(config.master_seed, r), Some(&initial[r])) {
                Ok(log) => AlgorithmOutcome { log, error: None },
                Err(f) => AlgorithmOutcome { error: Some(f.error.to_string()), log: *f.log },
            };
            (r, algorithm.kind(), outcome)
        })
        .collect();

    let mut runs: Vec<PairedRun> = initial
        .into_iter()
        .enumerate()
        .map(|(run, initial_population)| PairedRun { run, initial_population, outcomes: BTreeMap::new() })
        .collect();
    for (r, kind, outcome) in results {
        runs[r].outcomes.insert(kind, outcome);
    }
    let kinds: Vec<AlgorithmKind> = algorithms.iter().map(|a| a.kind()).collect();
    let summary = summarize_runs(&runs, &kinds);
    Ok(ComparisonReport {
        objective: spec.name().to_string(),
        master_seed: config.master_seed,
        budget_design_evals: budget,
        replicates: spec.replicates,
        runs,
        summary,
    })
}
