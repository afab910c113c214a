//! Agent state and the mechanics step of the surrogate.

use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::field::{CellIndex, OxygenField};
use super::params::{DesignParams, Schedule, SimConstants, SurrogateParams};
use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq)]
pub struct CancerCell {
    pub pos: [f64; 2],
    pub damage: f64,
    pub alive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Worker {
    pub pos: [f64; 2],
    /// Unit vector of the current persistent random direction.
    pub direction: [f64; 2],
    pub cargo: Option<usize>,
    pub alive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cargo {
    pub pos: [f64; 2],
    pub released: bool,
    pub released_at: f64,
    pub receptor: f64,
    pub carrier: Option<usize>,
}

/// Cancer-cell bookkeeping: `live + died_* == created` at all times.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellTally {
    pub created: u64,
    pub live: u64,
    pub died_by_drug: u64,
    pub died_by_necrosis: u64,
    pub died_by_apoptosis: u64,
}

impl CellTally {
    pub fn reconciles(&self) -> bool {
        self.live + self.died_by_drug + self.died_by_necrosis + self.died_by_apoptosis == self.created
    }
}

/// Hex-lattice offsets with the given spacing that lie within `radius`
/// of the origin, row by row from the bottom.
pub fn hex_disc(radius: f64, spacing: f64) -> Vec<[f64; 2]> {
    let row_h = spacing * 3f64.sqrt() / 2.0;
    let rows = (radius / row_h).floor() as i64;
    let tol = 1e-9 * spacing;
    let mut out = Vec::new();
    for j in -rows..=rows {
        let y = j as f64 * row_h;
        let shift = if j.rem_euclid(2) == 1 { spacing / 2.0 } else { 0.0 };
        let span = ((radius + spacing) / spacing).ceil() as i64;
        for i in -span..=span {
            let x = i as f64 * spacing + shift;
            if x * x + y * y <= radius * radius + tol {
                out.push([x, y]);
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct BiorobotWorld {
    pub(crate) surrogate: SurrogateParams,
    pub(crate) dt_diffusion: f64,
    pub oxygen: OxygenField,
    pub drug: Vec<f64>,
    uptake: Vec<f64>,
    pub cells: Vec<CancerCell>,
    pub workers: Vec<Worker>,
    pub cargos: Vec<Cargo>,
    /// Minutes since the start of the growth phase.
    pub clock: f64,
    pub tally: CellTally,
    index: CellIndex,
    cell_rng: ChaCha8Rng,
    agent_rng: ChaCha8Rng,
}

const CELL_STREAM: u64 = 0;
const AGENT_STREAM: u64 = 1;

impl BiorobotWorld {
    /// A tumour disc at the domain centre, O2 at the far-field value and no
    /// workers or cargo.
    pub fn new(schedule: &Schedule, surrogate: &SurrogateParams, seed: &RngStream) -> Result<Self> {
        schedule.validate()?;
        surrogate.validate(schedule)?;
        let (w, h) = (surrogate.domain_width, surrogate.domain_height);
        let radius = schedule.initial_tumor_radius;
        // One cell spacing of margin on every side.
        if 2.0 * (radius + surrogate.cell_spacing) > w.min(h) {
            return Err(Error::DomainTooSmall { radius, width: w, height: h });
        }
        let nx = (w / surrogate.voxel_size).round().max(1.0) as usize;
        let ny = (h / surrogate.voxel_size).round().max(1.0) as usize;
        let oxygen = OxygenField::new(nx, ny, surrogate.voxel_size, surrogate.far_field_o2);
        let mut index = CellIndex::new(w, h, surrogate.voxel_size);
        let centre = [w / 2.0, h / 2.0];
        let cells: Vec<CancerCell> = hex_disc(radius, surrogate.cell_spacing)
            .into_iter()
            .map(|[x, y]| CancerCell { pos: [centre[0] + x, centre[1] + y], damage: 0.0, alive: true })
            .collect();
        for (id, c) in cells.iter().enumerate() {
            index.insert(id, c.pos);
        }
        let n = cells.len() as u64;
        Ok(BiorobotWorld {
            surrogate: surrogate.clone(),
            dt_diffusion: schedule.dt_diffusion,
            drug: vec![0.0; nx * ny],
            uptake: vec![0.0; nx * ny],
            oxygen,
            cells,
            workers: Vec::new(),
            cargos: Vec::new(),
            clock: 0.0,
            tally: CellTally { created: n, live: n, ..CellTally::default() },
            index,
            cell_rng: seed.child(CELL_STREAM).rng(),
            agent_rng: seed.child(AGENT_STREAM).rng(),
        })
    }

    pub fn live_cells(&self) -> u64 {
        self.tally.live
    }

    pub fn released_cargo(&self) -> usize {
        self.cargos.iter().filter(|c| c.released).count()
    }

    fn domain(&self) -> [f64; 2] {
        [self.surrogate.domain_width, self.surrogate.domain_height]
    }

    /// Scatter workers and cargo over a strip along the left edge of the
    /// domain, centred vertically on the tumour.
    pub fn inject(&mut self, workers: usize, cargos: usize) {
        let [_, h] = self.domain();
        let strip = 2.0 * self.surrogate.cell_spacing;
        let x0 = self.surrogate.voxel_size;
        let band = h / 2.0;
        let place = |rng: &mut ChaCha8Rng| {
            [x0 + rng.random::<f64>() * strip, h / 2.0 - band / 2.0 + rng.random::<f64>() * band]
        };
        for _ in 0..workers {
            let pos = place(&mut self.agent_rng);
            let theta = self.agent_rng.random::<f64>() * TAU;
            self.workers.push(Worker { pos, direction: [theta.cos(), theta.sin()], cargo: None, alive: true });
        }
        for _ in 0..cargos {
            let pos = place(&mut self.agent_rng);
            self.cargos.push(Cargo { pos, released: false, released_at: f64::NAN, receptor: 1.0, carrier: None });
        }
    }

    /// Adds a free worker at an explicit position (used by tests and tools).
    pub fn add_worker(&mut self, pos: [f64; 2], direction: [f64; 2]) {
        self.workers.push(Worker { pos, direction, cargo: None, alive: true });
    }

    /// Removes every cancer cell, leaving an empty, fully oxygenated domain.
    pub fn clear_cells(&mut self) {
        for (id, c) in self.cells.iter().enumerate() {
            if c.alive {
                self.index.remove(id, c.pos);
            }
        }
        self.cells.clear();
        self.tally = CellTally::default();
    }

    /// Advances the world by one mechanics step of length `dt` minutes.
    pub fn step(&mut self, design: &DesignParams, consts: &SimConstants, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::Config(format!("step length must be > 0, got {dt}")));
        }
        self.update_oxygen(consts, dt);
        self.update_drug(consts);
        self.update_cells(consts, dt);
        if !self.workers.is_empty() || !self.cargos.is_empty() {
            self.update_agents(design, consts, dt);
        }
        self.clock += dt;
        self.check_finite()
    }

    fn update_oxygen(&mut self, consts: &SimConstants, dt: f64) {
        let s = &self.surrogate;
        let voxel_area = s.voxel_size * s.voxel_size;
        let disc = |r: f64| std::f64::consts::PI * r * r / voxel_area;
        let cell_rate = s.cancer_o2_uptake * disc(s.cell_spacing / 2.0);
        let worker_rate = s.cancer_o2_uptake * consts.worker_o2_relative_uptake * disc(s.worker_radius);
        let cargo_rate = s.cancer_o2_uptake * consts.cargo_o2_relative_uptake * disc(s.cargo_radius);

        self.uptake.iter_mut().for_each(|u| *u = 0.0);
        for c in self.cells.iter().filter(|c| c.alive) {
            self.uptake[self.oxygen.voxel_of(c.pos)] += cell_rate;
        }
        for w in self.workers.iter().filter(|w| w.alive) {
            self.uptake[self.oxygen.voxel_of(w.pos)] += worker_rate;
        }
        for c in &self.cargos {
            self.uptake[self.oxygen.voxel_of(c.pos)] += cargo_rate;
        }

        let substeps = (dt / self.dt_diffusion).ceil().max(1.0) as usize;
        let sub_dt = dt / substeps as f64;
        for _ in 0..substeps {
            self.oxygen.diffuse(s.o2_diffusion, &self.uptake, sub_dt);
        }
    }

    /// Drug deposited by released cargo: a cone of radius `drug_range`
    /// whose strength decays at the cargo apoptosis rate.
    fn update_drug(&mut self, consts: &SimConstants) {
        self.drug.iter_mut().for_each(|d| *d = 0.0);
        if !self.surrogate.drug_enabled {
            return;
        }
        let range = self.surrogate.drug_range;
        if range <= 0.0 {
            return;
        }
        let (nx, ny) = self.oxygen.shape();
        let h = self.oxygen.voxel_size();
        for c in self.cargos.iter().filter(|c| c.released) {
            let strength = (-consts.cargo_apoptosis_rate * (self.clock - c.released_at)).exp();
            let lo_i = ((c.pos[0] - range) / h).floor().max(0.0) as usize;
            let lo_j = ((c.pos[1] - range) / h).floor().max(0.0) as usize;
            let hi_i = (((c.pos[0] + range) / h).floor() as usize).min(nx - 1);
            let hi_j = (((c.pos[1] + range) / h).floor() as usize).min(ny - 1);
            for j in lo_j..=hi_j {
                for i in lo_i..=hi_i {
                    let k = j * nx + i;
                    let centre = self.oxygen.voxel_center(k);
                    let d = dist(centre, c.pos);
                    if d < range {
                        self.drug[k] += strength * (1.0 - d / range);
                    }
                }
            }
        }
    }

    fn update_cells(&mut self, consts: &SimConstants, dt: f64) {
        let s = self.surrogate.clone();
        let far = s.far_field_o2;
        let hyp = s.hypoxic_threshold;
        let spacing = s.cell_spacing;
        let [w, h] = [s.domain_width, s.domain_height];
        let existing = self.cells.len();
        for id in 0..existing {
            if !self.cells[id].alive {
                continue;
            }
            let pos = self.cells[id].pos;
            let voxel = self.oxygen.voxel_of(pos);
            let o2 = self.oxygen.values()[voxel];
            let drug = self.drug[voxel];

            let cell = &mut self.cells[id];
            if drug > 0.0 || cell.damage > 0.0 {
                cell.damage = (cell.damage + (consts.damage_rate * drug - consts.repair_rate) * dt).max(0.0);
            }
            let damage = cell.damage;

            let drive = if far > hyp { ((o2 - hyp) / (far - hyp)).clamp(0.0, 1.0) } else { 0.0 };
            let p_birth = s.birth_rate * drive * dt;
            let p_necrosis = if o2 < s.necrotic_threshold { s.necrosis_rate * dt } else { 0.0 };
            let p_apoptosis = s.apoptosis_rate * dt;
            let p_drug = consts.drug_death_rate * damage * dt;

            // One draw per live cell per step, partitioned into competing
            // events. The drug band comes last so that disabling the drug
            // leaves every other outcome untouched.
            let u: f64 = self.cell_rng.random();
            let mut edge = p_birth;
            if u < edge {
                let theta = self.cell_rng.random::<f64>() * TAU;
                let child = [pos[0] + spacing * theta.cos(), pos[1] + spacing * theta.sin()];
                let margin = spacing / 2.0;
                let inside =
                    child[0] >= margin && child[0] <= w - margin && child[1] >= margin && child[1] <= h - margin;
                if inside && !self.crowded(child, 0.9 * spacing) {
                    let new_id = self.cells.len();
                    self.cells.push(CancerCell { pos: child, damage, alive: true });
                    self.index.insert(new_id, child);
                    self.tally.created += 1;
                    self.tally.live += 1;
                }
                continue;
            }
            edge += p_necrosis;
            if u < edge {
                self.kill(id);
                self.tally.died_by_necrosis += 1;
                continue;
            }
            edge += p_apoptosis;
            if u < edge {
                self.kill(id);
                self.tally.died_by_apoptosis += 1;
                continue;
            }
            edge += p_drug;
            if u < edge {
                self.kill(id);
                self.tally.died_by_drug += 1;
            }
        }
    }

    fn crowded(&self, pos: [f64; 2], min_dist: f64) -> bool {
        let mut hit = false;
        let cells = &self.cells;
        self.index.for_each_near(pos, min_dist, |id| {
            if !hit && cells[id].alive && dist(cells[id].pos, pos) < min_dist {
                hit = true;
            }
        });
        hit
    }

    fn kill(&mut self, id: usize) {
        let pos = self.cells[id].pos;
        self.cells[id].alive = false;
        self.index.remove(id, pos);
        self.tally.live -= 1;
    }

    /// Summed contact velocity on an agent from live cancer cells and other
    /// mobile agents. `skip_worker` / `skip_cargo` exclude the agent itself
    /// and its tethered partner.
    #[allow(clippy::too_many_arguments)]
    fn contact_velocity(
        &self,
        pos: [f64; 2],
        radius: f64,
        rel_adhesion: f64,
        rel_repulsion: f64,
        consts: &SimConstants,
        skip_worker: Option<usize>,
        skip_cargo: Option<usize>,
        worker_rel: (f64, f64),
    ) -> [f64; 2] {
        let s = &self.surrogate;
        let mut v = [0.0; 2];
        let mut push = |other: [f64; 2], other_radius: f64, other_adh: f64, other_rep: f64| {
            let (dx, dy) = (pos[0] - other[0], pos[1] - other[1]);
            let d2 = dx * dx + dy * dy;
            let reach = radius + other_radius;
            let adhesion_reach = consts.max_relative_adhesion_distance * reach;
            let outer = reach.max(adhesion_reach);
            if d2 <= 1e-24 || d2 >= outer * outer {
                return;
            }
            let d = d2.sqrt();
            let mut speed = 0.0;
            if d < reach {
                speed += s.repulsion_strength * (rel_repulsion * other_rep).sqrt() * (1.0 - d / reach).powi(2);
            }
            if d < adhesion_reach {
                speed -= s.adhesion_strength * (rel_adhesion * other_adh).sqrt() * (1.0 - d / adhesion_reach).powi(2);
            }
            v[0] += speed * dx / d;
            v[1] += speed * dy / d;
        };

        let cell_radius = s.cell_spacing / 2.0;
        let reach = consts.max_relative_adhesion_distance.max(1.0) * (radius + cell_radius);
        self.index.for_each_near(pos, reach, |id| {
            let c = &self.cells[id];
            if c.alive {
                push(c.pos, cell_radius, 1.0, 1.0);
            }
        });
        for (k, w) in self.workers.iter().enumerate() {
            if w.alive && Some(k) != skip_worker {
                push(w.pos, s.worker_radius, worker_rel.0, worker_rel.1);
            }
        }
        for (k, c) in self.cargos.iter().enumerate() {
            if Some(k) != skip_cargo {
                push(c.pos, s.cargo_radius, consts.cargo_relative_adhesion, consts.cargo_relative_repulsion);
            }
        }
        v
    }

    fn update_agents(&mut self, design: &DesignParams, consts: &SimConstants, dt: f64) {
        let worker_rel = (design.worker_relative_adhesion, design.worker_relative_repulsion);
        let redraw =
            if design.worker_persistence_time > 0.0 { (dt / design.worker_persistence_time).min(1.0) } else { 1.0 };

        // Worker deaths and direction redraws consume the agent stream in
        // worker order.
        for k in 0..self.workers.len() {
            if !self.workers[k].alive {
                continue;
            }
            if consts.worker_apoptosis_rate > 0.0 && self.agent_rng.random::<f64>() < consts.worker_apoptosis_rate * dt
            {
                self.workers[k].alive = false;
                if let Some(c) = self.workers[k].cargo.take() {
                    self.cargos[c].carrier = None;
                }
                continue;
            }
            if self.agent_rng.random::<f64>() < redraw {
                let theta = self.agent_rng.random::<f64>() * TAU;
                self.workers[k].direction = [theta.cos(), theta.sin()];
            }
        }

        // Velocities from the frozen configuration, then a synchronous move.
        let s = &self.surrogate;
        let mut worker_v = vec![[0.0; 2]; self.workers.len()];
        for (k, w) in self.workers.iter().enumerate() {
            if !w.alive {
                continue;
            }
            let attached = w.cargo.is_some();
            let grad = self.oxygen.gradient(w.pos);
            let mag = (grad[0] * grad[0] + grad[1] * grad[1]).sqrt();
            let sign = if attached { -1.0 } else { 1.0 };
            let chemo = if mag < consts.motility_shutdown_threshold || mag == 0.0 {
                [0.0, 0.0]
            } else {
                [sign * grad[0] / mag, sign * grad[1] / mag]
            };
            let bias = if attached { design.attached_migration_bias } else { design.unattached_migration_bias };
            let speed = consts.worker_migration_speed;
            let mut v = [
                speed * (bias * chemo[0] + (1.0 - bias) * w.direction[0]),
                speed * (bias * chemo[1] + (1.0 - bias) * w.direction[1]),
            ];
            let contact = self.contact_velocity(
                w.pos,
                s.worker_radius,
                design.worker_relative_adhesion,
                design.worker_relative_repulsion,
                consts,
                Some(k),
                w.cargo,
                worker_rel,
            );
            v[0] += contact[0];
            v[1] += contact[1];
            if let Some(c) = w.cargo {
                let cp = self.cargos[c].pos;
                v[0] += consts.elastic_coefficient * (cp[0] - w.pos[0]);
                v[1] += consts.elastic_coefficient * (cp[1] - w.pos[1]);
            }
            worker_v[k] = v;
        }
        let mut cargo_v = vec![[0.0; 2]; self.cargos.len()];
        for (k, c) in self.cargos.iter().enumerate() {
            if c.released {
                continue;
            }
            let mut v = self.contact_velocity(
                c.pos,
                s.cargo_radius,
                consts.cargo_relative_adhesion,
                consts.cargo_relative_repulsion,
                consts,
                c.carrier,
                Some(k),
                worker_rel,
            );
            if let Some(w) = c.carrier {
                let wp = self.workers[w].pos;
                v[0] += consts.elastic_coefficient * (wp[0] - c.pos[0]);
                v[1] += consts.elastic_coefficient * (wp[1] - c.pos[1]);
            }
            cargo_v[k] = v;
        }

        let [w, h] = self.domain();
        let max_step = s.max_step;
        let worker_r = s.worker_radius;
        let cargo_r = s.cargo_radius;
        for (agent, v) in self.workers.iter_mut().zip(&worker_v).filter(|(a, _)| a.alive) {
            agent.pos = displace(agent.pos, *v, dt, max_step, worker_r, w, h);
        }
        for (agent, v) in self.cargos.iter_mut().zip(&cargo_v).filter(|(a, _)| !a.released) {
            agent.pos = displace(agent.pos, *v, dt, max_step, cargo_r, w, h);
        }

        // Tethers snap beyond the maximum elastic displacement.
        for k in 0..self.workers.len() {
            if let Some(c) = self.workers[k].cargo {
                if dist(self.workers[k].pos, self.cargos[c].pos) > consts.max_elastic_displacement {
                    self.workers[k].cargo = None;
                    self.cargos[c].carrier = None;
                }
            }
        }

        // Free workers grab the nearest eligible cargo in the attachment band.
        for k in 0..self.workers.len() {
            let wk = &self.workers[k];
            if !wk.alive || wk.cargo.is_some() {
                continue;
            }
            let mut best: Option<(f64, usize)> = None;
            for (c, cargo) in self.cargos.iter().enumerate() {
                if cargo.released || cargo.carrier.is_some() || cargo.receptor <= consts.attachment_receptor_threshold {
                    continue;
                }
                let d = dist(wk.pos, cargo.pos);
                if d >= consts.min_attachment_distance
                    && d <= consts.max_attachment_distance
                    && best.is_none_or(|(bd, _)| d < bd)
                {
                    best = Some((d, c));
                }
            }
            if let Some((_, c)) = best {
                self.workers[k].cargo = Some(c);
                self.cargos[c].carrier = Some(k);
            }
        }

        // Carried cargo is dropped and releases its drug in hypoxic tissue.
        for c in 0..self.cargos.len() {
            let Some(k) = self.cargos[c].carrier else { continue };
            if self.oxygen.at(self.cargos[c].pos) < design.cargo_release_o2_threshold {
                let cargo = &mut self.cargos[c];
                cargo.released = true;
                cargo.released_at = self.clock + dt;
                cargo.receptor = 0.0;
                cargo.carrier = None;
                self.workers[k].cargo = None;
            }
        }
    }

    fn check_finite(&self) -> Result<()> {
        let unstable = |what: &str| Err(Error::NumericalInstability { time: self.clock, what: what.to_string() });
        let (lo, hi) = self.oxygen.min_max();
        if !lo.is_finite() || !hi.is_finite() {
            return unstable("oxygen field");
        }
        if self.workers.iter().any(|w| !(w.pos[0].is_finite() && w.pos[1].is_finite())) {
            return unstable("worker position");
        }
        if self.cargos.iter().any(|c| !(c.pos[0].is_finite() && c.pos[1].is_finite())) {
            return unstable("cargo position");
        }
        if self.cells.iter().any(|c| !c.damage.is_finite()) {
            return unstable("cell damage");
        }
        Ok(())
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (a[0] - b[0], a[1] - b[1]);
    (dx * dx + dy * dy).sqrt()
}

fn displace(pos: [f64; 2], v: [f64; 2], dt: f64, max_step: f64, r: f64, w: f64, h: f64) -> [f64; 2] {
    let mut step = [v[0] * dt, v[1] * dt];
    let len = (step[0] * step[0] + step[1] * step[1]).sqrt();
    if len > max_step && len > 0.0 {
        step = [step[0] * max_step / len, step[1] * max_step / len];
    }
    [(pos[0] + step[0]).clamp(r, w - r), (pos[1] + step[1]).clamp(r, h - r)]
}
