//! Uniform random search, used as a sanity baseline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::space::{Genome, SearchSpace};

const SAMPLE_TAG: u64 = 0x75;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RandomSearchConfig {
    /// Samples per logging generation.
    pub population_size: usize,
}

impl Default for RandomSearchConfig {
    fn default() -> Self {
        RandomSearchConfig { population_size: 20 }
    }
}

impl RandomSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size == 0 {
            return Err(Error::PopulationTooSmall { required: 1, actual: 0 });
        }
        Ok(())
    }
}

/// The `k` fresh samples of logging generation `generation`.
pub fn random_batch(space: &SearchSpace, root: &RngStream, generation: u64, k: usize) -> Vec<Genome> {
    (0..k as u64).map(|i| space.sample_from_stream(&root.derive(&[SAMPLE_TAG, generation, i]))).collect()
}
