//! Bounded real-valued evolutionary optimization (DE/rand/1 with binomial
//! crossover and a steady-state GA) against a stochastic agent-based
//! drug-delivery surrogate, plus the paired-comparison harness used to
//! study convergence and population diversity.

// `!(x > 0.0)` style checks reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod biorobots;
pub mod diversity;
pub mod error;
pub mod harness;
pub mod objectives;
pub mod optimizers;
pub mod rng;
pub mod space;

pub use diversity::{diversity, DiversityStats, DEFAULT_DUP_TOL};
pub use error::{Error, EvaluatorError, Result};
pub use harness::{compare, export_report, export_run, ComparisonReport, ExperimentConfig, RunLog};
pub use objectives::{BudgetLedger, Fitness, Objective, ObjectiveSpec};
pub use optimizers::{run, Algorithm, AlgorithmKind, DeConfig, EvaluatedIndividual, GaConfig, OptimizerState};
pub use rng::RngStream;
pub use space::{BoundHandling, Dimension, Genome, SearchSpace};
