use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{Genome, SearchSpace};

/// The six nanoparticle design parameters under optimization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignParams {
    pub attached_migration_bias: f64,
    pub unattached_migration_bias: f64,
    pub worker_relative_adhesion: f64,
    pub worker_relative_repulsion: f64,
    /// min
    pub worker_persistence_time: f64,
    /// mmHg
    pub cargo_release_o2_threshold: f64,
}

impl DesignParams {
    pub fn from_genome(g: &Genome) -> Result<Self> {
        let space = SearchSpace::biorobots();
        space.check_feasible(g)?;
        Ok(DesignParams {
            attached_migration_bias: g[0],
            unattached_migration_bias: g[1],
            worker_relative_adhesion: g[2],
            worker_relative_repulsion: g[3],
            worker_persistence_time: g[4],
            cargo_release_o2_threshold: g[5],
        })
    }

    pub fn to_genome(&self) -> Genome {
        Genome::new(vec![
            self.attached_migration_bias,
            self.unattached_migration_bias,
            self.worker_relative_adhesion,
            self.worker_relative_repulsion,
            self.worker_persistence_time,
            self.cargo_release_o2_threshold,
        ])
    }

    /// Centre of the design box.
    pub fn mid_box() -> Self {
        DesignParams {
            attached_migration_bias: 0.5,
            unattached_migration_bias: 0.5,
            worker_relative_adhesion: 5.0,
            worker_relative_repulsion: 5.0,
            worker_persistence_time: 5.0,
            cargo_release_o2_threshold: 10.0,
        }
    }
}

/// Fixed (non-design) constants of the scenario. Defaults are the stock
/// values of the anti-cancer biorobots project.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConstants {
    pub damage_rate: f64,
    pub repair_rate: f64,
    pub drug_death_rate: f64,
    pub elastic_coefficient: f64,
    pub cargo_o2_relative_uptake: f64,
    pub cargo_apoptosis_rate: f64,
    pub cargo_relative_adhesion: f64,
    pub cargo_relative_repulsion: f64,
    pub max_relative_adhesion_distance: f64,
    pub max_elastic_displacement: f64,
    pub max_attachment_distance: f64,
    pub min_attachment_distance: f64,
    pub motility_shutdown_threshold: f64,
    pub attachment_receptor_threshold: f64,
    pub worker_migration_speed: f64,
    pub worker_apoptosis_rate: f64,
    pub worker_o2_relative_uptake: f64,
}

impl Default for SimConstants {
    fn default() -> Self {
        SimConstants {
            damage_rate: 0.03333,
            repair_rate: 0.004167,
            drug_death_rate: 0.004167,
            elastic_coefficient: 0.05,
            cargo_o2_relative_uptake: 0.1,
            cargo_apoptosis_rate: 4.065e-5,
            cargo_relative_adhesion: 0.0,
            cargo_relative_repulsion: 5.0,
            max_relative_adhesion_distance: 1.25,
            max_elastic_displacement: 50.0,
            max_attachment_distance: 18.0,
            min_attachment_distance: 14.0,
            motility_shutdown_threshold: 0.001,
            attachment_receptor_threshold: 0.1,
            worker_migration_speed: 2.0,
            worker_apoptosis_rate: 0.0,
            worker_o2_relative_uptake: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// 12 h growth + 6 h treatment with rates scaled up to match.
    #[default]
    Desk,
    /// 7 days growth + 3 days treatment.
    Full,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Preset::Desk),
            "full" => Ok(Preset::Full),
            other => Err(Error::Config(format!("unknown preset `{other}` (expected desk|full)"))),
        }
    }
}

/// Durations in minutes, lengths in um.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub growth_duration: f64,
    pub treatment_duration: f64,
    pub dt_diffusion: f64,
    pub dt_mechanics: f64,
    pub initial_tumor_radius: f64,
    pub worker_count: usize,
    pub cargo_count: usize,
}

const FULL_GROWTH: f64 = 7.0 * 24.0 * 60.0;
const FULL_TREATMENT: f64 = 3.0 * 24.0 * 60.0;
const DESK_GROWTH: f64 = 12.0 * 60.0;
const DESK_TREATMENT: f64 = 6.0 * 60.0;

impl Schedule {
    pub fn preset(preset: Preset) -> Self {
        let (growth_duration, treatment_duration) = match preset {
            Preset::Desk => (DESK_GROWTH, DESK_TREATMENT),
            Preset::Full => (FULL_GROWTH, FULL_TREATMENT),
        };
        Schedule {
            growth_duration,
            treatment_duration,
            dt_diffusion: 0.1,
            dt_mechanics: 1.0,
            initial_tumor_radius: 200.0,
            worker_count: 50,
            cargo_count: 50,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("schedule: {m}")));
        if !(self.growth_duration > 0.0) || !(self.treatment_duration >= 0.0) {
            return bad("growth_duration must be > 0 and treatment_duration >= 0");
        }
        if !(self.dt_diffusion > 0.0) || !(self.dt_mechanics > 0.0) {
            return bad("time steps must be > 0");
        }
        if self.dt_diffusion > self.dt_mechanics {
            return bad("dt_diffusion must not exceed dt_mechanics");
        }
        if !(self.initial_tumor_radius >= 0.0) || !self.initial_tumor_radius.is_finite() {
            return bad("initial_tumor_radius must be finite and >= 0");
        }
        Ok(())
    }

    pub fn growth_steps(&self) -> usize {
        (self.growth_duration / self.dt_mechanics).round() as usize
    }

    pub fn treatment_steps(&self) -> usize {
        (self.treatment_duration / self.dt_mechanics).round() as usize
    }
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::preset(Preset::Desk)
    }
}

/// Surrogate-only settings: domain geometry, oxygen transport, tumour
/// kinetics and contact mechanics. None of these are design variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurrogateParams {
    pub domain_width: f64,
    pub domain_height: f64,
    pub voxel_size: f64,
    /// Dirichlet value on the domain boundary, mmHg.
    pub far_field_o2: f64,
    /// Below this O2 level cancer cells stop dividing, mmHg.
    pub hypoxic_threshold: f64,
    /// Below this O2 level cancer cells die at `necrosis_rate`, mmHg.
    pub necrotic_threshold: f64,
    /// um^2/min
    pub o2_diffusion: f64,
    /// Cancer-cell O2 uptake, 1/min; worker and cargo uptake are relative to it.
    pub cancer_o2_uptake: f64,
    /// Division rate at far-field O2, 1/min.
    pub birth_rate: f64,
    pub necrosis_rate: f64,
    pub apoptosis_rate: f64,
    /// Centre-to-centre distance of packed cancer cells, um.
    pub cell_spacing: f64,
    pub worker_radius: f64,
    pub cargo_radius: f64,
    /// Reach of the drug deposited by one released cargo, um.
    pub drug_range: f64,
    /// Contact repulsion / adhesion speed scales, um/min.
    pub repulsion_strength: f64,
    pub adhesion_strength: f64,
    /// Cap on agent displacement per mechanics step, um.
    pub max_step: f64,
    /// When false, released cargo deposits no drug (sham treatment).
    pub drug_enabled: bool,
}

impl SurrogateParams {
    pub fn preset(preset: Preset) -> Self {
        // Tumour kinetics are expressed per full-scale minute and sped up
        // by the ratio of growth windows for the desk preset.
        let (speedup, domain) = match preset {
            Preset::Desk => (FULL_GROWTH / DESK_GROWTH, 640.0),
            Preset::Full => (1.0, 1000.0),
        };
        SurrogateParams {
            domain_width: domain,
            domain_height: domain,
            voxel_size: 20.0,
            far_field_o2: 38.0,
            hypoxic_threshold: 5.0,
            necrotic_threshold: 2.5,
            o2_diffusion: 1000.0,
            cancer_o2_uptake: 0.3,
            birth_rate: 3.0e-4 * speedup,
            necrosis_rate: 1.5e-4 * speedup,
            apoptosis_rate: 0.0,
            cell_spacing: 15.0,
            worker_radius: 3.0,
            cargo_radius: 3.0,
            drug_range: 50.0,
            repulsion_strength: 10.0,
            adhesion_strength: 0.4,
            max_step: 4.0,
            drug_enabled: true,
        }
    }

    pub fn validate(&self, schedule: &Schedule) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("surrogate: {m}")));
        for (name, v) in [
            ("domain_width", self.domain_width),
            ("domain_height", self.domain_height),
            ("voxel_size", self.voxel_size),
            ("cell_spacing", self.cell_spacing),
            ("far_field_o2", self.far_field_o2),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} must be finite and > 0"));
            }
        }
        for (name, v) in [
            ("o2_diffusion", self.o2_diffusion),
            ("cancer_o2_uptake", self.cancer_o2_uptake),
            ("birth_rate", self.birth_rate),
            ("necrosis_rate", self.necrosis_rate),
            ("apoptosis_rate", self.apoptosis_rate),
            ("drug_range", self.drug_range),
            ("max_step", self.max_step),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(format!("{name} must be finite and >= 0"));
            }
        }
        // Explicit diffusion is stable and monotone for D dt / h^2 <= 1/4.
        let r = self.diffusion_number(schedule.dt_diffusion);
        if r > 0.25 * (1.0 + 1e-12) {
            return bad(format!(
                "dt_diffusion {} violates the stability limit {} (D dt / h^2 = {r})",
                schedule.dt_diffusion,
                self.max_stable_dt()
            ));
        }
        Ok(())
    }

    pub fn diffusion_number(&self, dt: f64) -> f64 {
        self.o2_diffusion * dt / (self.voxel_size * self.voxel_size)
    }

    pub fn max_stable_dt(&self) -> f64 {
        0.25 * self.voxel_size * self.voxel_size / self.o2_diffusion
    }
}

impl Default for SurrogateParams {
    fn default() -> Self {
        SurrogateParams::preset(Preset::Desk)
    }
}

/// Everything a replicate needs besides the design and the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub constants: SimConstants,
    pub schedule: Schedule,
    pub surrogate: SurrogateParams,
}

impl Scenario {
    pub fn preset(preset: Preset) -> Self {
        Scenario {
            constants: SimConstants::default(),
            schedule: Schedule::preset(preset),
            surrogate: SurrogateParams::preset(preset),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        self.surrogate.validate(&self.schedule)
    }
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario::preset(Preset::Desk)
    }
}
