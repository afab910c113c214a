//! Objective functions, replicate averaging and budget accounting.

mod benchmarks;
mod budget;
mod external;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use benchmarks::{rastrigin, sphere, CONVENTIONAL_HALF_WIDTH};
pub use budget::{BudgetLedger, LedgerSnapshot};
pub use external::{external_evaluate, parse_response, request_line, ExternalEvaluatorConfig};

use crate::biorobots::{self, DesignParams, Scenario};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::space::{Genome, SearchSpace};

/// Replicates per design evaluation unless configured otherwise.
pub const DEFAULT_REPLICATES: usize = 5;

/// Stream tag for fitness evaluations, below the run's root stream.
const EVAL_TAG: u64 = 0xE7A1;

/// Something that scores a feasible genome; lower is better.
pub trait Objective: Send + Sync {
    fn space(&self) -> &SearchSpace;

    /// Replicates averaged per design evaluation.
    fn replicates(&self) -> usize;

    /// One replicate, deterministic given `(genome, seed)`.
    fn evaluate_once(&self, genome: &Genome, seed: &RngStream) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveKind {
    Sphere,
    Rastrigin,
    Biorobots(Box<Scenario>),
    External(ExternalEvaluatorConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    pub space: SearchSpace,
    pub replicates: usize,
}

impl ObjectiveSpec {
    /// Sphere on the conventional `[-5.12, 5.12]^d` box, one replicate.
    pub fn sphere(d: usize) -> Result<Self> {
        let space = SearchSpace::cube(d, -CONVENTIONAL_HALF_WIDTH, CONVENTIONAL_HALF_WIDTH)?;
        Ok(ObjectiveSpec { kind: ObjectiveKind::Sphere, space, replicates: 1 })
    }

    pub fn rastrigin(d: usize) -> Result<Self> {
        let space = SearchSpace::cube(d, -CONVENTIONAL_HALF_WIDTH, CONVENTIONAL_HALF_WIDTH)?;
        Ok(ObjectiveSpec { kind: ObjectiveKind::Rastrigin, space, replicates: 1 })
    }

    /// The surrogate on the six-parameter design space with the default
    /// number of replicates.
    pub fn biorobots(scenario: Scenario) -> Self {
        ObjectiveSpec {
            kind: ObjectiveKind::Biorobots(Box::new(scenario)),
            space: SearchSpace::biorobots(),
            replicates: DEFAULT_REPLICATES,
        }
    }

    pub fn external(cfg: ExternalEvaluatorConfig, space: SearchSpace) -> Self {
        ObjectiveSpec { kind: ObjectiveKind::External(cfg), space, replicates: DEFAULT_REPLICATES }
    }

    pub fn with_replicates(mut self, replicates: usize) -> Self {
        self.replicates = replicates;
        self
    }

    pub fn with_space(mut self, space: SearchSpace) -> Self {
        self.space = space;
        self
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ObjectiveKind::Sphere => "sphere",
            ObjectiveKind::Rastrigin => "rastrigin",
            ObjectiveKind::Biorobots(_) => "biorobots",
            ObjectiveKind::External(_) => "external",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("objective replicates must be >= 1".into()));
        }
        match &self.kind {
            ObjectiveKind::Biorobots(scenario) => {
                let design = SearchSpace::biorobots();
                if self.space.dim() != design.dim() {
                    return Err(Error::Config("the biorobots objective takes exactly 6 design parameters".into()));
                }
                // A narrower box is fine (e.g. frozen parameters); a wider one is not.
                for (d, (mine, allowed)) in self.space.dimensions().iter().zip(design.dimensions()).enumerate() {
                    if mine.lo < allowed.lo || mine.hi > allowed.hi {
                        return Err(Error::Config(format!(
                            "biorobots dimension {d} ({}) must lie within [{}, {}]",
                            allowed.name, allowed.lo, allowed.hi
                        )));
                    }
                }
                scenario.validate()
            }
            ObjectiveKind::External(cfg) if cfg.command.is_empty() => {
                Err(Error::Config("external evaluator command is empty".into()))
            }
            _ => Ok(()),
        }
    }
}

impl Objective for ObjectiveSpec {
    fn space(&self) -> &SearchSpace {
        &self.space
    }

    fn replicates(&self) -> usize {
        self.replicates
    }

    fn evaluate_once(&self, genome: &Genome, seed: &RngStream) -> Result<f64> {
        self.space.check_feasible(genome)?;
        match &self.kind {
            ObjectiveKind::Sphere => Ok(sphere(genome.values())),
            ObjectiveKind::Rastrigin => Ok(rastrigin(genome.values())),
            ObjectiveKind::Biorobots(scenario) => {
                let design = DesignParams::from_genome(genome)?;
                Ok(biorobots::simulate(&design, scenario, seed)? as f64)
            }
            ObjectiveKind::External(cfg) => Ok(external_evaluate(cfg, genome.values(), seed.seed_u64())?),
        }
    }
}

/// Mean fitness of one design together with its replicate record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fitness {
    pub value: f64,
    pub replicate_values: Vec<f64>,
    pub replicate_seeds: Vec<u64>,
}

impl Fitness {
    /// Arithmetic mean summed in replicate order.
    pub fn from_replicates(replicate_values: Vec<f64>, replicate_seeds: Vec<u64>) -> Self {
        let value = replicate_values.iter().sum::<f64>() / replicate_values.len() as f64;
        Fitness { value, replicate_values, replicate_seeds }
    }
}

/// Stream for the design evaluated at `(generation, individual)` of a run.
/// Both optimizers use the same addressing, so a shared initial population
/// receives identical replicate seeds in either algorithm.
pub fn eval_stream(root: &RngStream, generation: u64, individual: u64) -> RngStream {
    root.derive(&[EVAL_TAG, generation, individual])
}

fn replicate_with_retry(objective: &dyn Objective, genome: &Genome, stream: &RngStream, r: u64) -> Result<(f64, u64)> {
    let first = stream.derive(&[r, 0]);
    match objective.evaluate_once(genome, &first) {
        Ok(v) => Ok((v, first.seed_u64())),
        Err(e) if e.is_evaluator_failure() => {
            // One retry on a fresh derived seed, then give up.
            let second = stream.derive(&[r, 1]);
            objective.evaluate_once(genome, &second).map(|v| (v, second.seed_u64()))
        }
        Err(e) => Err(e),
    }
}

/// Runs the objective's replicates for one design and charges the ledger
/// one design evaluation plus `R` simulator runs. Nothing is charged if the
/// budget is exhausted or the evaluation fails.
pub fn evaluate_mean(
    objective: &dyn Objective,
    genome: &Genome,
    stream: &RngStream,
    ledger: &BudgetLedger,
) -> Result<Fitness> {
    objective.space().check_feasible(genome)?;
    ledger.try_acquire()?;
    let replicates = objective.replicates() as u64;
    let results: Vec<Result<(f64, u64)>> =
        (0..replicates).into_par_iter().map(|r| replicate_with_retry(objective, genome, stream, r)).collect();
    let mut values = Vec::with_capacity(results.len());
    let mut seeds = Vec::with_capacity(results.len());
    for res in results {
        match res {
            Ok((v, s)) => {
                values.push(v);
                seeds.push(s);
            }
            Err(e) => {
                ledger.release();
                return Err(e);
            }
        }
    }
    ledger.record_sim_runs(replicates);
    Ok(Fitness::from_replicates(values, seeds))
}
