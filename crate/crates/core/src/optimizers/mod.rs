//! Population-based optimizers over a [`SearchSpace`](crate::SearchSpace):
//! DE/rand/1, a steady-state GA and a uniform random-search baseline.
//!
//! Fitness is minimized. NaN ranks worse than every number.

pub mod de;
pub mod ga;
pub mod random;

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use de::{
    de_crossover_binomial, de_generation, de_mutate, de_mutation_indices, de_select, rand1_mutant, Crossover, DeConfig,
    DeStrategy, MutationEvent, Selected, SelectionRule,
};
pub use ga::{
    best_index, ga_mutate, ga_step, ga_tournament, ga_uniform_crossover, tournament_winner, GaConfig, TournamentMode,
};
pub use random::{random_batch, RandomSearchConfig};

use crate::error::{Error, Result};
use crate::harness::{GenerationRecord, RunLog};
use crate::objectives::{eval_stream, evaluate_mean, BudgetLedger, Fitness, Objective};
use crate::rng::RngStream;
use crate::space::{Genome, SearchSpace};

const INIT_TAG: u64 = 0x1417;

/// Total order on fitness values with NaN last.
pub fn fitness_cmp(a: f64, b: f64) -> Ordering {
    match (a.is_nan(), b.is_nan()) {
        (true, true) => Ordering::Equal,
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        (false, false) => a.partial_cmp(&b).expect("neither is NaN"),
    }
}

/// Strict improvement under [`fitness_cmp`].
pub fn is_better(a: f64, b: f64) -> bool {
    fitness_cmp(a, b).is_lt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedIndividual {
    pub genome: Genome,
    pub fitness: Fitness,
    /// Generation in which this design was evaluated; 0 is the initial population.
    pub generation: u64,
    /// Slot within that generation.
    pub index: usize,
}

impl EvaluatedIndividual {
    pub fn value(&self) -> f64 {
        self.fitness.value
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub population: Vec<EvaluatedIndividual>,
    pub generation: u64,
    /// First individual in `history` attaining the minimum fitness.
    pub best_ever: EvaluatedIndividual,
    /// Every individual evaluated, in evaluation order.
    pub history: Vec<EvaluatedIndividual>,
    pub diagnostics: Vec<String>,
    pub mutation_events: Vec<MutationEvent>,
}

impl OptimizerState {
    /// State whose history starts with the given, already evaluated, population.
    pub fn from_population(population: Vec<EvaluatedIndividual>) -> Result<Self> {
        let first = population.first().ok_or(Error::EmptyPopulation)?.clone();
        let mut state = OptimizerState {
            population: population.clone(),
            generation: 0,
            best_ever: first,
            history: Vec::with_capacity(population.len()),
            diagnostics: Vec::new(),
            mutation_events: Vec::new(),
        };
        for e in &population {
            state.record_tested(e);
        }
        Ok(state)
    }

    pub(crate) fn record_tested(&mut self, e: &EvaluatedIndividual) {
        if is_better(e.value(), self.best_ever.value()) {
            self.best_ever = e.clone();
        }
        self.history.push(e.clone());
    }

    pub fn genomes(&self) -> Vec<Genome> {
        self.population.iter().map(|e| e.genome.clone()).collect()
    }
}

/// `p` genomes drawn uniformly from the box, genome `i` from `stream.child(i)`.
pub fn init_population(space: &SearchSpace, p: usize, stream: &RngStream) -> Vec<Genome> {
    (0..p as u64).map(|i| space.sample_from_stream(&stream.child(i))).collect()
}

/// Evaluates `genomes` as generation `generation`, slot `i` at
/// `eval_stream(root, generation, i)`. Successful evaluations are returned
/// in slot order even when another slot failed.
fn evaluate_batch(
    objective: &dyn Objective,
    genomes: &[Genome],
    generation: u64,
    root: &RngStream,
    ledger: &BudgetLedger,
) -> (Vec<EvaluatedIndividual>, Option<Error>) {
    let results: Vec<Result<Fitness>> = genomes
        .par_iter()
        .enumerate()
        .map(|(i, g)| evaluate_mean(objective, g, &eval_stream(root, generation, i as u64), ledger))
        .collect();
    let mut ok = Vec::with_capacity(results.len());
    let mut err = None;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(fitness) => ok.push(EvaluatedIndividual { genome: genomes[i].clone(), fitness, generation, index: i }),
            Err(e) => {
                err.get_or_insert(e);
            }
        }
    }
    (ok, err)
}

/// Adopts an externally supplied population and evaluates it as generation 0.
pub fn init_from(
    objective: &dyn Objective,
    genomes: Vec<Genome>,
    root: &RngStream,
    ledger: &BudgetLedger,
) -> Result<OptimizerState> {
    for g in &genomes {
        objective.space().check_feasible(g)?;
    }
    let (evaluated, err) = evaluate_batch(objective, &genomes, 0, root, ledger);
    if let Some(e) = err {
        return Err(e);
    }
    OptimizerState::from_population(evaluated)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    De,
    Ga,
    RandomSearch,
}

impl AlgorithmKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AlgorithmKind::De => "de",
            AlgorithmKind::Ga => "ga",
            AlgorithmKind::RandomSearch => "random_search",
        }
    }
}

impl std::str::FromStr for AlgorithmKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "de" => Ok(AlgorithmKind::De),
            "ga" => Ok(AlgorithmKind::Ga),
            "random_search" | "random" => Ok(AlgorithmKind::RandomSearch),
            other => Err(Error::Config(format!("unknown algorithm `{other}` (expected de|ga|random_search)"))),
        }
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum Algorithm {
    De(DeConfig),
    Ga(GaConfig),
    RandomSearch(RandomSearchConfig),
}

impl Algorithm {
    pub fn kind(&self) -> AlgorithmKind {
        match self {
            Algorithm::De(_) => AlgorithmKind::De,
            Algorithm::Ga(_) => AlgorithmKind::Ga,
            Algorithm::RandomSearch(_) => AlgorithmKind::RandomSearch,
        }
    }

    pub fn population_size(&self) -> usize {
        match self {
            Algorithm::De(c) => c.population_size,
            Algorithm::Ga(c) => c.population_size,
            Algorithm::RandomSearch(c) => c.population_size,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Algorithm::De(c) => c.validate(),
            Algorithm::Ga(c) => c.validate(),
            Algorithm::RandomSearch(c) => c.validate(),
        }
    }
}

/// A run that stopped on an error, with everything logged before it.
#[derive(Debug)]
pub struct RunFailure {
    pub log: Box<RunLog>,
    pub error: Error,
}

impl fmt::Display for RunFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} run failed after {} design evaluations: {}",
            self.log.algorithm, self.log.ledger.design_evals_used, self.error
        )
    }
}

impl std::error::Error for RunFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

struct Recorder<'a> {
    log: RunLog,
    space: &'a SearchSpace,
    ledger: &'a BudgetLedger,
}

impl Recorder<'_> {
    fn generation(
        &mut self,
        generation: u64,
        population: &[EvaluatedIndividual],
        best: &EvaluatedIndividual,
        partial: bool,
    ) {
        let record = GenerationRecord::capture(generation, population, best, self.space, self.ledger, partial)
            .expect("population is non-empty and matches the space");
        self.log.generations.push(record);
    }

    fn finish(
        mut self,
        state: Option<OptimizerState>,
        error: Option<Error>,
    ) -> std::result::Result<RunLog, RunFailure> {
        if let Some(state) = state {
            self.log.history = state.history;
            self.log.final_population = state.population;
            self.log.best = Some(state.best_ever);
            self.log.diagnostics.extend(state.diagnostics);
            self.log.mutation_events = state.mutation_events;
        }
        self.log.ledger = self.ledger.snapshot();
        match error {
            None => Ok(self.log),
            Some(error) => Err(RunFailure { log: Box::new(self.log), error }),
        }
    }
}

/// Runs `algorithm` until `budget` design evaluations are spent.
///
/// Generation 0 is the initial population and counts against the budget.
/// Without `initial`, the population is drawn from `root`. The result
/// depends only on the arguments, not on thread scheduling.
pub fn run(
    algorithm: &Algorithm,
    objective: &dyn Objective,
    budget: u64,
    root: &RngStream,
    initial: Option<&[Genome]>,
) -> std::result::Result<RunLog, RunFailure> {
    let space = objective.space();
    let ledger = BudgetLedger::new(budget);
    let mut rec =
        Recorder { log: RunLog::empty(algorithm.kind(), space.clone(), root.clone()), space, ledger: &ledger };
    let p = algorithm.population_size();
    let setup = algorithm.validate().and_then(|()| match initial {
        Some(genomes) => {
            if genomes.len() != p {
                return Err(Error::Config(format!(
                    "initial population has {} members, algorithm expects {p}",
                    genomes.len()
                )));
            }
            genomes.iter().try_for_each(|g| space.check_feasible(g))?;
            Ok(genomes.to_vec())
        }
        None => Ok(init_population(space, p, &root.child(INIT_TAG))),
    });
    let genomes = match setup {
        Ok(g) => g,
        Err(e) => return rec.finish(None, Some(e)),
    };

    let k = (budget as usize).min(p);
    let (evaluated, err) = evaluate_batch(objective, &genomes[..k], 0, root, &ledger);
    if evaluated.is_empty() {
        return rec.finish(None, err);
    }
    let mut state = OptimizerState::from_population(evaluated).expect("non-empty");
    rec.generation(0, &state.population, &state.best_ever, k < p);
    if err.is_some() || k < p {
        return rec.finish(Some(state), err);
    }

    let outcome = match algorithm {
        Algorithm::De(cfg) => run_de(&mut state, objective, cfg, root, &mut rec),
        Algorithm::Ga(cfg) => run_ga(&mut state, objective, cfg, root, &mut rec),
        Algorithm::RandomSearch(_) => run_random(&mut state, objective, root, &mut rec),
    };
    rec.finish(Some(state), outcome.err())
}

fn run_de(
    state: &mut OptimizerState,
    objective: &dyn Objective,
    cfg: &DeConfig,
    root: &RngStream,
    rec: &mut Recorder<'_>,
) -> Result<()> {
    let p = state.population.len();
    while rec.ledger.remaining() > 0 {
        let k = de_generation(state, objective, cfg, rec.ledger, root)?;
        rec.generation(state.generation, &state.population, &state.best_ever, k < p);
    }
    Ok(())
}

fn run_ga(
    state: &mut OptimizerState,
    objective: &dyn Objective,
    cfg: &GaConfig,
    root: &RngStream,
    rec: &mut Recorder<'_>,
) -> Result<()> {
    let p = state.population.len() as u64;
    let mut step = 0u64;
    let result = loop {
        if rec.ledger.remaining() == 0 {
            break Ok(());
        }
        if let Err(e) = ga_step(state, objective, cfg, rec.ledger, root, step) {
            break Err(e);
        }
        step += 1;
        if step.is_multiple_of(p) {
            state.generation = step / p;
            rec.generation(state.generation, &state.population, &state.best_ever, false);
        }
    };
    if !step.is_multiple_of(p) {
        state.generation = step / p + 1;
        rec.generation(state.generation, &state.population, &state.best_ever, true);
    }
    result
}

fn run_random(
    state: &mut OptimizerState,
    objective: &dyn Objective,
    root: &RngStream,
    rec: &mut Recorder<'_>,
) -> Result<()> {
    let p = state.population.len();
    while rec.ledger.remaining() > 0 {
        let generation = state.generation + 1;
        let k = (rec.ledger.remaining() as usize).min(p);
        let batch = random_batch(objective.space(), root, generation, k);
        let (evaluated, err) = evaluate_batch(objective, &batch, generation, root, rec.ledger);
        for e in evaluated {
            state.record_tested(&e);
            let slot = e.index;
            state.population[slot] = e;
        }
        if let Some(e) = err {
            return Err(e);
        }
        state.generation = generation;
        rec.generation(generation, &state.population, &state.best_ever, k < p);
    }
    Ok(())
}
