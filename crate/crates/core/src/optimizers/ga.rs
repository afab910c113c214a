//! Steady-state GA: one offspring per step, tournament selection and
//! tournament replacement with the current best member protected.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{fitness_cmp, EvaluatedIndividual, OptimizerState};
use crate::error::{Error, Result};
use crate::objectives::{eval_stream, evaluate_mean, BudgetLedger, Objective};
use crate::rng::RngStream;
use crate::space::{Genome, SearchSpace};

const VARIATION_TAG: u64 = 0x6A;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population_size: usize,
    pub tournament_size: usize,
    pub crossover_probability: f64,
    pub mutation_rate: f64,
    /// Additive mutation step range, as fractions of each dimension's width.
    pub mutation_step: (f64, f64),
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 20,
            tournament_size: 2,
            crossover_probability: 0.8,
            mutation_rate: 0.2,
            mutation_step: (-0.05, 0.05),
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tournament_size == 0 {
            return Err(Error::Config("GA tournament size must be >= 1".into()));
        }
        // The replace tournament draws from everyone except the best member.
        let required = (self.tournament_size + 1).max(2);
        if self.population_size < required {
            return Err(Error::PopulationTooSmall { required, actual: self.population_size });
        }
        for (name, p) in [("crossover probability", self.crossover_probability), ("mutation rate", self.mutation_rate)]
        {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("GA {name} must lie in [0, 1], got {p}")));
            }
        }
        let (lo, hi) = self.mutation_step;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Config(format!("GA mutation step must be a finite interval, got [{lo}, {hi}]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TournamentMode {
    /// Best of the drawn candidates wins.
    Select,
    /// Worst of the drawn candidates is chosen.
    Replace,
}

/// Winner among `candidates`; ties go to the earliest candidate.
pub fn tournament_winner(fitness: &[f64], candidates: &[usize], mode: TournamentMode) -> usize {
    let mut best = candidates[0];
    for &c in &candidates[1..] {
        let ord = fitness_cmp(fitness[c], fitness[best]);
        let wins = match mode {
            TournamentMode::Select => ord.is_lt(),
            TournamentMode::Replace => ord.is_gt(),
        };
        if wins {
            best = c;
        }
    }
    best
}

/// Draws `t` distinct indices uniformly from `0..fitness.len()`, skipping
/// `exclude`, and returns the tournament winner.
pub fn ga_tournament<R: Rng + ?Sized>(
    fitness: &[f64],
    t: usize,
    rng: &mut R,
    mode: TournamentMode,
    exclude: Option<usize>,
) -> Result<usize> {
    if t == 0 {
        return Err(Error::Config("tournament size must be >= 1".into()));
    }
    let pool = fitness.len() - usize::from(exclude.is_some_and(|e| e < fitness.len()));
    if t > pool {
        return Err(Error::PopulationTooSmall { required: t, actual: pool });
    }
    let candidates: Vec<usize> = index::sample(rng, pool, t)
        .into_iter()
        .map(|i| match exclude {
            Some(e) if i >= e => i + 1,
            _ => i,
        })
        .collect();
    Ok(tournament_winner(fitness, &candidates, mode))
}

/// With probability `x` each gene comes from either parent with
/// probability ½; otherwise the child copies `p1`.
pub fn ga_uniform_crossover<R: Rng + ?Sized>(p1: &Genome, p2: &Genome, x: f64, rng: &mut R) -> Result<Genome> {
    if p1.len() != p2.len() {
        return Err(Error::DimensionMismatch { expected: p1.len(), actual: p2.len() });
    }
    if !rng.random_bool(x) {
        return Ok(p1.clone());
    }
    Ok(Genome::new(
        p1.values().iter().zip(p2.values()).map(|(&a, &b)| if rng.random_bool(0.5) { a } else { b }).collect(),
    ))
}

/// Each gene, with probability `rate`, moves by a uniform step drawn from
/// `step` times the dimension's width and is clamped back into the box.
pub fn ga_mutate<R: Rng + ?Sized>(
    space: &SearchSpace,
    g: &Genome,
    rate: f64,
    step: (f64, f64),
    rng: &mut R,
) -> Result<Genome> {
    space.check_len(g.len())?;
    let moved: Vec<f64> = g
        .values()
        .iter()
        .zip(space.dimensions())
        .map(|(&v, d)| {
            if rng.random_bool(rate) {
                let s = step.0 + (step.1 - step.0) * rng.random::<f64>();
                v + s * d.width()
            } else {
                v
            }
        })
        .collect();
    space.repair_clamp(&moved)
}

/// Index of the best member; ties go to the lowest index.
pub fn best_index(pop: &[EvaluatedIndividual]) -> usize {
    let fitness: Vec<f64> = pop.iter().map(|e| e.fitness.value).collect();
    tournament_winner(&fitness, &(0..pop.len()).collect::<Vec<_>>(), TournamentMode::Select)
}

/// One steady-state step. `step` counts steps since initialization and
/// fixes both the variation stream and the evaluation address
/// `(1 + step / P, step % P)`. Returns the replaced index.
pub fn ga_step(
    state: &mut OptimizerState,
    objective: &dyn Objective,
    config: &GaConfig,
    ledger: &BudgetLedger,
    root: &RngStream,
    step: u64,
) -> Result<usize> {
    if ledger.remaining() == 0 {
        return Err(Error::BudgetExhausted { used: ledger.design_evals_used(), max: ledger.design_evals_max() });
    }
    let p = state.population.len();
    let space = objective.space();
    let mut rng = root.derive(&[VARIATION_TAG, step]).rng();
    let fitness: Vec<f64> = state.population.iter().map(|e| e.fitness.value).collect();

    let a = ga_tournament(&fitness, config.tournament_size, &mut rng, TournamentMode::Select, None)?;
    let b = ga_tournament(&fitness, config.tournament_size, &mut rng, TournamentMode::Select, None)?;
    let child = ga_uniform_crossover(
        &state.population[a].genome,
        &state.population[b].genome,
        config.crossover_probability,
        &mut rng,
    )?;
    let child = ga_mutate(space, &child, config.mutation_rate, config.mutation_step, &mut rng)?;
    let elite = best_index(&state.population);
    let victim = ga_tournament(&fitness, config.tournament_size, &mut rng, TournamentMode::Replace, Some(elite))?;

    let (generation, index) = (1 + step / p as u64, (step % p as u64) as usize);
    let fitness = evaluate_mean(objective, &child, &eval_stream(root, generation, index as u64), ledger)?;
    let child = EvaluatedIndividual { genome: child, fitness, generation, index };
    state.record_tested(&child);
    state.population[victim] = child;
    Ok(victim)
}
