//! DE/rand/1 with binomial crossover and one-to-one selection.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{is_better, EvaluatedIndividual, OptimizerState};
use crate::error::{Error, Result};
use crate::objectives::{eval_stream, evaluate_mean, BudgetLedger, Objective};
use crate::rng::RngStream;
use crate::space::{BoundHandling, Genome, SearchSpace};

const VARIATION_TAG: u64 = 0xDE;

/// Base-vector choice and number of difference pairs ("DE/base/num").
/// Only `rand/1` is implemented.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeStrategy {
    #[default]
    #[serde(rename = "rand_1")]
    Rand1,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Crossover {
    #[default]
    Binomial,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// Trial replaces target only if strictly better.
    #[default]
    Strict,
    /// Trial also replaces target on equal fitness.
    AllowEqual,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeConfig {
    pub population_size: usize,
    pub scaling_factor: f64,
    pub crossover_rate: f64,
    pub strategy: DeStrategy,
    pub crossover: Crossover,
    pub selection: SelectionRule,
    pub bound_handling: BoundHandling,
    /// Keep every `(target, r1, r2, r3)` draw in the run log for auditing.
    pub record_mutations: bool,
}

impl Default for DeConfig {
    fn default() -> Self {
        DeConfig {
            population_size: 20,
            scaling_factor: 0.5,
            crossover_rate: 0.9,
            strategy: DeStrategy::Rand1,
            crossover: Crossover::Binomial,
            selection: SelectionRule::Strict,
            bound_handling: BoundHandling::Clamp,
            record_mutations: false,
        }
    }
}

impl DeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 4 {
            return Err(Error::PopulationTooSmall { required: 4, actual: self.population_size });
        }
        if !(self.scaling_factor >= 0.0) || !self.scaling_factor.is_finite() {
            return Err(Error::Config(format!(
                "DE scaling factor must be finite and >= 0, got {}",
                self.scaling_factor
            )));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(Error::Config(format!("DE crossover rate must lie in [0, 1], got {}", self.crossover_rate)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationEvent {
    pub generation: u64,
    pub target: usize,
    pub r1: usize,
    pub r2: usize,
    pub r3: usize,
}

/// Draws `r1, r2, r3` uniformly among ordered triples of distinct indices
/// that all differ from `target`.
pub fn de_mutation_indices<R: Rng + ?Sized>(pop_size: usize, target: usize, rng: &mut R) -> Result<[usize; 3]> {
    if pop_size < 4 {
        return Err(Error::PopulationTooSmall { required: 4, actual: pop_size });
    }
    let mut taken = [target, usize::MAX, usize::MAX];
    let mut out = [0usize; 3];
    for k in 0..3 {
        // Uniform over the pop_size - 1 - k indices not yet taken.
        let mut pick = rng.random_range(0..pop_size - 1 - k);
        let mut sorted: Vec<usize> = taken[..=k].to_vec();
        sorted.sort_unstable();
        for &t in &sorted {
            if pick >= t {
                pick += 1;
            }
        }
        out[k] = pick;
        if k < 2 {
            taken[k + 1] = pick;
        }
    }
    Ok(out)
}

/// `base + F * (a - b)`, before any bound repair.
pub fn rand1_mutant(base: &[f64], a: &[f64], b: &[f64], scaling_factor: f64) -> Vec<f64> {
    base.iter().zip(a.iter().zip(b)).map(|(x, (y, z))| x + scaling_factor * (y - z)).collect()
}

/// Mutant vector for `target`, repaired into the box, plus the indices used.
pub fn de_mutate<R: Rng + ?Sized>(
    space: &SearchSpace,
    pop: &[Genome],
    target: usize,
    scaling_factor: f64,
    bound_handling: BoundHandling,
    rng: &mut R,
) -> Result<(Genome, [usize; 3])> {
    let idx = de_mutation_indices(pop.len(), target, rng)?;
    let [r1, r2, r3] = idx;
    let raw = rand1_mutant(pop[r1].values(), pop[r2].values(), pop[r3].values(), scaling_factor);
    Ok((space.repair(&raw, bound_handling)?, idx))
}

/// Binomial crossover: every gene comes from the mutant with probability
/// `cr`, and the gene at one uniformly drawn position always does.
pub fn de_crossover_binomial<R: Rng + ?Sized>(
    target: &Genome,
    mutant: &Genome,
    cr: f64,
    rng: &mut R,
) -> Result<Genome> {
    if target.len() != mutant.len() {
        return Err(Error::DimensionMismatch { expected: target.len(), actual: mutant.len() });
    }
    let d = target.len();
    let forced = rng.random_range(0..d);
    Ok(Genome::new(
        (0..d)
            .map(|j| {
                let u: f64 = rng.random();
                if u < cr || j == forced {
                    mutant[j]
                } else {
                    target[j]
                }
            })
            .collect(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selected {
    Trial,
    Target,
    /// Target kept because the trial's fitness was not a number.
    TargetNan,
}

pub fn de_select(target: &EvaluatedIndividual, trial: &EvaluatedIndividual, rule: SelectionRule) -> Selected {
    let (t, c) = (trial.fitness.value, target.fitness.value);
    if t.is_nan() {
        return Selected::TargetNan;
    }
    let wins = match rule {
        SelectionRule::Strict => is_better(t, c),
        SelectionRule::AllowEqual => is_better(t, c) || t == c,
    };
    if wins {
        Selected::Trial
    } else {
        Selected::Target
    }
}

struct TrialOutcome {
    trial: Result<EvaluatedIndividual>,
    event: MutationEvent,
}

/// One synchronous generation. Only the first `min(P, remaining budget)`
/// targets are challenged; the generation is partial if that is fewer than P.
/// Returns the number of targets challenged.
pub fn de_generation(
    state: &mut OptimizerState,
    objective: &dyn Objective,
    config: &DeConfig,
    ledger: &BudgetLedger,
    root: &RngStream,
) -> Result<usize> {
    let p = state.population.len();
    if p < 4 {
        return Err(Error::PopulationTooSmall { required: 4, actual: p });
    }
    let k = (ledger.remaining() as usize).min(p);
    if k == 0 {
        return Err(Error::BudgetExhausted { used: ledger.design_evals_used(), max: ledger.design_evals_max() });
    }
    let generation = state.generation + 1;
    let space = objective.space();
    let genomes: Vec<Genome> = state.population.iter().map(|e| e.genome.clone()).collect();

    let outcomes: Vec<TrialOutcome> = (0..k)
        .into_par_iter()
        .map(|i| {
            let mut rng = root.derive(&[VARIATION_TAG, generation, i as u64]).rng();
            let (mutant, [r1, r2, r3]) =
                de_mutate(space, &genomes, i, config.scaling_factor, config.bound_handling, &mut rng)
                    .expect("population size checked above");
            let trial = de_crossover_binomial(&genomes[i], &mutant, config.crossover_rate, &mut rng)
                .expect("mutant has the target's dimension");
            let fitness = evaluate_mean(objective, &trial, &eval_stream(root, generation, i as u64), ledger);
            TrialOutcome {
                trial: fitness.map(|fitness| EvaluatedIndividual { genome: trial, fitness, generation, index: i }),
                event: MutationEvent { generation, target: i, r1, r2, r3 },
            }
        })
        .collect();

    let mut first_error = None;
    let mut trials = Vec::with_capacity(k);
    for o in outcomes {
        if config.record_mutations {
            state.mutation_events.push(o.event);
        }
        match o.trial {
            Ok(t) => {
                state.record_tested(&t);
                trials.push(Some(t));
            }
            Err(e) => {
                first_error.get_or_insert(e);
                trials.push(None);
            }
        }
    }
    if let Some(e) = first_error {
        return Err(e);
    }

    for (i, trial) in trials.into_iter().enumerate() {
        let trial = trial.expect("errors returned above");
        match de_select(&state.population[i], &trial, config.selection) {
            Selected::Trial => state.population[i] = trial,
            Selected::Target => {}
            Selected::TargetNan => state
                .diagnostics
                .push(format!("generation {generation}: trial for target {i} has NaN fitness; target kept")),
        }
    }
    state.generation = generation;
    Ok(k)
}
