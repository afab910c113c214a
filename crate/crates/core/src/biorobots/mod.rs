//! Agent-based surrogate of the anti-cancer biorobots scenario.
//!
//! A 2-D tumour grows for the growth phase in an oxygen field that
//! diffuses in from the domain boundary. Workers (functionalized
//! nanoparticles) and cargo (drug carriers) are then injected at the left
//! edge. Free workers climb the O2 gradient towards the cargo, attach to
//! it, and haul it down the gradient into hypoxic tissue, where the cargo
//! is released and deposits a short-range drug field. Drug exposure raises
//! cell damage, and damage drives drug-induced death.
//!
//! The observable is the number of live cancer cells at the end of the
//! treatment phase. Only the six [`DesignParams`] are meant to vary between
//! evaluations; [`SimConstants`] holds the fixed project constants and
//! [`SurrogateParams`] the surrogate's own geometry and kinetics.

mod field;
mod params;
mod world;

use serde::{Deserialize, Serialize};

pub use field::OxygenField;
pub use params::{DesignParams, Preset, Scenario, Schedule, SimConstants, SurrogateParams};
pub use world::{hex_disc, BiorobotWorld, CancerCell, Cargo, CellTally, Worker};

use crate::error::Result;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    /// min
    pub t: f64,
    pub live_cells: u64,
    pub released_cargo: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSummary {
    pub live_cells: u64,
    pub tally: CellTally,
    pub growth_only_cells: u64,
    pub released_cargo: usize,
    pub attached_workers: usize,
    pub final_time: f64,
    pub min_o2: f64,
    pub max_o2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub summary: ReplicateSummary,
    /// Empty unless tracing was requested.
    pub trace: Vec<TracePoint>,
}

/// Runs one replicate and returns the number of live cancer cells.
pub fn simulate(design: &DesignParams, scenario: &Scenario, seed: &RngStream) -> Result<u64> {
    Ok(run_replicate(design, scenario, seed, false)?.summary.live_cells)
}

pub fn run_replicate(
    design: &DesignParams,
    scenario: &Scenario,
    seed: &RngStream,
    trace: bool,
) -> Result<ReplicateOutcome> {
    DesignParams::from_genome(&design.to_genome())?;
    let schedule = &scenario.schedule;
    let mut world = BiorobotWorld::new(schedule, &scenario.surrogate, seed)?;
    let dt = schedule.dt_mechanics;
    let mut points = Vec::new();
    let mut record = |world: &BiorobotWorld| {
        if trace {
            points.push(TracePoint {
                t: world.clock,
                live_cells: world.live_cells(),
                released_cargo: world.released_cargo(),
            });
        }
    };
    record(&world);
    for _ in 0..schedule.growth_steps() {
        world.step(design, &scenario.constants, dt)?;
        record(&world);
    }
    let growth_only_cells = world.live_cells();
    let treatment_steps = schedule.treatment_steps();
    if treatment_steps > 0 {
        world.inject(schedule.worker_count, schedule.cargo_count);
        for _ in 0..treatment_steps {
            world.step(design, &scenario.constants, dt)?;
            record(&world);
        }
    }
    let (min_o2, max_o2) = world.oxygen.min_max();
    Ok(ReplicateOutcome {
        summary: ReplicateSummary {
            live_cells: world.live_cells(),
            tally: world.tally,
            growth_only_cells,
            released_cargo: world.released_cargo(),
            attached_workers: world.workers.iter().filter(|w| w.cargo.is_some()).count(),
            final_time: world.clock,
            min_o2,
            max_o2,
        },
        trace: points,
    })
}
