use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::biorobots::{Preset, Scenario, Schedule, SimConstants, SurrogateParams};
use crate::error::{Error, Result};
use crate::objectives::{ExternalEvaluatorConfig, ObjectiveSpec, DEFAULT_REPLICATES};
use crate::optimizers::{Algorithm, DeConfig, GaConfig, RandomSearchConfig};
use crate::space::SearchSpace;

fn default_dimension() -> usize {
    6
}

fn default_timeout() -> f64 {
    600.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveSection {
    Sphere {
        #[serde(default = "default_dimension")]
        dimension: usize,
        #[serde(default)]
        replicates: Option<usize>,
    },
    Rastrigin {
        #[serde(default = "default_dimension")]
        dimension: usize,
        #[serde(default)]
        replicates: Option<usize>,
    },
    Biorobots {
        #[serde(default)]
        preset: Preset,
        #[serde(default)]
        constants: Box<SimConstants>,
        /// Replaces the preset's surrogate settings wholesale.
        #[serde(default)]
        surrogate: Option<SurrogateParams>,
        #[serde(default)]
        replicates: Option<usize>,
    },
    External {
        command: Vec<String>,
        #[serde(default = "default_timeout")]
        timeout_secs: f64,
        #[serde(default)]
        replicates: Option<usize>,
    },
}

impl ObjectiveSection {
    fn replicates(&self) -> Option<usize> {
        match self {
            ObjectiveSection::Sphere { replicates, .. }
            | ObjectiveSection::Rastrigin { replicates, .. }
            | ObjectiveSection::Biorobots { replicates, .. }
            | ObjectiveSection::External { replicates, .. } => *replicates,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetUnit {
    DesignEvals,
    SimRuns,
}

impl std::str::FromStr for BudgetUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "design" | "design_evals" => Ok(BudgetUnit::DesignEvals),
            "sim" | "sim_runs" => Ok(BudgetUnit::SimRuns),
            other => Err(Error::Config(format!("unknown budget unit `{other}` (expected design|sim)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub unit: BudgetUnit,
    pub max: u64,
}

impl Budget {
    /// Design evaluations available; a simulator-run budget buys
    /// `floor(max / R)` of them.
    pub fn design_evals(&self, replicates: usize) -> u64 {
        match self.unit {
            BudgetUnit::DesignEvals => self.max,
            BudgetUnit::SimRuns => self.max / replicates as u64,
        }
    }
}

fn enabled() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSection<C> {
    #[serde(default = "enabled")]
    pub enabled: bool,
    #[serde(flatten)]
    pub config: C,
}

impl<C: Default> Default for AlgorithmSection<C> {
    fn default() -> Self {
        AlgorithmSection { enabled: true, config: C::default() }
    }
}

fn random_search_disabled() -> AlgorithmSection<RandomSearchConfig> {
    AlgorithmSection { enabled: false, config: RandomSearchConfig::default() }
}

fn default_runs() -> usize {
    3
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

/// One experiment: an objective, the algorithms to run on it and a shared
/// budget. Keys starting with `_` are treated as comments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_runs")]
    pub comparison_runs: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub objective: ObjectiveSection,
    /// Overrides the objective's default box. Required for `external`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SearchSpace>,
    /// Overrides the preset's schedule; biorobots only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Schedule>,
    #[serde(default)]
    pub de: AlgorithmSection<DeConfig>,
    #[serde(default)]
    pub ga: AlgorithmSection<GaConfig>,
    #[serde(default = "random_search_disabled")]
    pub random_search: AlgorithmSection<RandomSearchConfig>,
    pub budget: Budget,
    #[serde(flatten, skip_serializing)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl ExperimentConfig {
    /// DE and GA on the surrogate with 1000 simulator runs per algorithm,
    /// three paired runs.
    pub fn reference_study(preset: Preset) -> Self {
        ExperimentConfig {
            master_seed: 0,
            comparison_runs: 3,
            output_dir: default_output_dir(),
            objective: ObjectiveSection::Biorobots {
                preset,
                constants: Box::default(),
                surrogate: None,
                replicates: Some(DEFAULT_REPLICATES),
            },
            space: None,
            schedule: None,
            de: AlgorithmSection::default(),
            ga: AlgorithmSection::default(),
            random_search: random_search_disabled(),
            budget: Budget { unit: BudgetUnit::SimRuns, max: 1000 },
            extra: BTreeMap::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is always serializable")
    }

    /// Switches a biorobots objective to `preset`, keeping explicit overrides.
    pub fn set_preset(&mut self, new: Preset) -> Result<()> {
        match &mut self.objective {
            ObjectiveSection::Biorobots { preset, .. } => {
                *preset = new;
                Ok(())
            }
            _ => Err(Error::Config("--preset applies to the biorobots objective only".into())),
        }
    }

    pub fn objective_spec(&self) -> Result<ObjectiveSpec> {
        let spec = match &self.objective {
            ObjectiveSection::Sphere { dimension, .. } => ObjectiveSpec::sphere(*dimension)?,
            ObjectiveSection::Rastrigin { dimension, .. } => ObjectiveSpec::rastrigin(*dimension)?,
            ObjectiveSection::Biorobots { preset, constants, surrogate, .. } => {
                let mut scenario = Scenario::preset(*preset);
                scenario.constants = (**constants).clone();
                if let Some(s) = surrogate {
                    scenario.surrogate = s.clone();
                }
                if let Some(s) = &self.schedule {
                    scenario.schedule = s.clone();
                }
                ObjectiveSpec::biorobots(scenario)
            }
            ObjectiveSection::External { command, timeout_secs, .. } => {
                let space = self
                    .space
                    .clone()
                    .ok_or_else(|| Error::Config("the external objective needs a `space` section".into()))?;
                ObjectiveSpec::external(
                    ExternalEvaluatorConfig { command: command.clone(), timeout_secs: *timeout_secs },
                    space,
                )
            }
        };
        let spec = match self.objective.replicates() {
            Some(r) => spec.with_replicates(r),
            None => spec,
        };
        let spec = match &self.space {
            Some(space) => spec.with_space(space.clone()),
            None => spec,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn budget_design_evals(&self) -> Result<u64> {
        Ok(self.budget.design_evals(self.objective_spec()?.replicates))
    }

    /// Enabled algorithms in the fixed order DE, GA, random search.
    pub fn algorithms(&self) -> Vec<Algorithm> {
        let mut out = Vec::new();
        if self.de.enabled {
            out.push(Algorithm::De(self.de.config.clone()));
        }
        if self.ga.enabled {
            out.push(Algorithm::Ga(self.ga.config.clone()));
        }
        if self.random_search.enabled {
            out.push(Algorithm::RandomSearch(self.random_search.config.clone()));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(key) = self.extra.keys().find(|k| !k.starts_with('_')) {
            return Err(Error::Config(format!("unknown config key `{key}`")));
        }
        if self.comparison_runs == 0 {
            return Err(Error::Config("comparison_runs must be >= 1".into()));
        }
        if self.schedule.is_some() && !matches!(self.objective, ObjectiveSection::Biorobots { .. }) {
            return Err(Error::Config("a `schedule` section applies to the biorobots objective only".into()));
        }
        self.objective_spec()?;
        let algorithms = self.algorithms();
        if algorithms.is_empty() {
            return Err(Error::Config("at least one algorithm must be enabled".into()));
        }
        for a in &algorithms {
            a.validate()?;
        }
        let p = algorithms[0].population_size();
        if algorithms.iter().any(|a| a.population_size() != p) {
            return Err(Error::Config("enabled algorithms must share one population size".into()));
        }
        Ok(())
    }
}
