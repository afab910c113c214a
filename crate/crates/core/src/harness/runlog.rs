use serde::{Deserialize, Serialize};

use crate::diversity::{diversity, DiversityStats, DEFAULT_DUP_TOL};
use crate::error::Result;
use crate::objectives::{BudgetLedger, LedgerSnapshot};
use crate::optimizers::{fitness_cmp, AlgorithmKind, EvaluatedIndividual, MutationEvent};
use crate::rng::RngStream;
use crate::space::{Genome, SearchSpace};

/// Snapshot taken after each generation (for the GA, after every P steps).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: u64,
    /// Mean fitness of the current population.
    pub avg_fitness: f64,
    /// Best fitness of everything evaluated so far.
    pub best_fitness: f64,
    pub diversity: DiversityStats,
    /// Cumulative design evaluations at the time of the snapshot.
    pub design_evals: u64,
    pub sim_runs: u64,
    /// The budget ran out before this generation completed.
    pub partial: bool,
}

impl GenerationRecord {
    pub fn capture(
        generation: u64,
        population: &[EvaluatedIndividual],
        best: &EvaluatedIndividual,
        space: &SearchSpace,
        ledger: &BudgetLedger,
        partial: bool,
    ) -> Result<Self> {
        let genomes: Vec<Genome> = population.iter().map(|e| e.genome.clone()).collect();
        let snap = ledger.snapshot();
        Ok(GenerationRecord {
            generation,
            avg_fitness: mean_fitness(population),
            best_fitness: best.value(),
            diversity: diversity(space, &genomes, DEFAULT_DUP_TOL)?,
            design_evals: snap.design_evals_used,
            sim_runs: snap.sim_runs_used,
            partial,
        })
    }
}

/// Mean of the population's fitness values, summed in slot order.
pub fn mean_fitness(population: &[EvaluatedIndividual]) -> f64 {
    population.iter().map(|e| e.value()).sum::<f64>() / population.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub algorithm: AlgorithmKind,
    pub space: SearchSpace,
    pub root: RngStream,
    pub generations: Vec<GenerationRecord>,
    /// Every evaluated design in evaluation order.
    pub history: Vec<EvaluatedIndividual>,
    pub final_population: Vec<EvaluatedIndividual>,
    pub best: Option<EvaluatedIndividual>,
    pub ledger: LedgerSnapshot,
    /// Filled only when the DE config asks for it.
    pub mutation_events: Vec<MutationEvent>,
    pub diagnostics: Vec<String>,
}

impl RunLog {
    pub fn empty(algorithm: AlgorithmKind, space: SearchSpace, root: RngStream) -> Self {
        RunLog {
            algorithm,
            space,
            root,
            generations: Vec::new(),
            history: Vec::new(),
            final_population: Vec::new(),
            best: None,
            ledger: LedgerSnapshot::default(),
            mutation_events: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    pub fn best_fitness(&self) -> Option<f64> {
        self.best.as_ref().map(|b| b.value())
    }

    pub fn best_fitness_series(&self) -> Vec<f64> {
        self.generations.iter().map(|g| g.best_fitness).collect()
    }

    pub fn avg_fitness_series(&self) -> Vec<f64> {
        self.generations.iter().map(|g| g.avg_fitness).collect()
    }

    /// Members of the initial population, in slot order.
    pub fn initial_population(&self) -> Vec<&EvaluatedIndividual> {
        self.history.iter().filter(|e| e.generation == 0).collect()
    }

    /// Minimum over `history`, NaN last.
    pub fn history_min(&self) -> Option<f64> {
        self.history.iter().map(|e| e.value()).min_by(|a, b| fitness_cmp(*a, *b))
    }
}
