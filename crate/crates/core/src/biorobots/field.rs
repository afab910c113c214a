//! Voxel fields on the 2-D domain: oxygen transport and a spatial index
//! for cancer cells.

/// Cell-centred voxel grid with a Dirichlet (far-field) boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct OxygenField {
    nx: usize,
    ny: usize,
    h: f64,
    boundary: f64,
    values: Vec<f64>,
    scratch: Vec<f64>,
}

impl OxygenField {
    pub fn new(nx: usize, ny: usize, h: f64, boundary: f64) -> Self {
        OxygenField { nx, ny, h, boundary, values: vec![boundary; nx * ny], scratch: vec![boundary; nx * ny] }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn voxel_size(&self) -> f64 {
        self.h
    }

    pub fn boundary(&self) -> f64 {
        self.boundary
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn voxel_of(&self, pos: [f64; 2]) -> usize {
        voxel_index(self.nx, self.ny, self.h, pos)
    }

    pub fn at(&self, pos: [f64; 2]) -> f64 {
        self.values[self.voxel_of(pos)]
    }

    pub fn voxel_center(&self, idx: usize) -> [f64; 2] {
        let (i, j) = (idx % self.nx, idx / self.nx);
        [(i as f64 + 0.5) * self.h, (j as f64 + 0.5) * self.h]
    }

    fn get(&self, i: isize, j: isize) -> f64 {
        if i < 0 || j < 0 || i >= self.nx as isize || j >= self.ny as isize {
            self.boundary
        } else {
            self.values[j as usize * self.nx + i as usize]
        }
    }

    /// Central-difference gradient at the voxel containing `pos`, mmHg/um.
    pub fn gradient(&self, pos: [f64; 2]) -> [f64; 2] {
        let idx = self.voxel_of(pos);
        let (i, j) = ((idx % self.nx) as isize, (idx / self.nx) as isize);
        let two_h = 2.0 * self.h;
        [(self.get(i + 1, j) - self.get(i - 1, j)) / two_h, (self.get(i, j + 1) - self.get(i, j - 1)) / two_h]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)))
    }

    /// One diffusion-uptake update of length `dt`.
    ///
    /// Diffusion is forward Euler; uptake is taken linearly implicit so that
    /// for `diffusion * dt / h^2 <= 1/4` each new value is a weighted average
    /// of old neighbours scaled by `1 / (1 + dt * uptake)`, which keeps the
    /// field inside `[0, boundary]` for any non-negative uptake.
    pub fn diffuse(&mut self, diffusion: f64, uptake: &[f64], dt: f64) {
        debug_assert_eq!(uptake.len(), self.values.len());
        let r = diffusion * dt / (self.h * self.h);
        let centre = 1.0 - 4.0 * r;
        let (nx, ny, u) = (self.nx, self.ny, self.boundary);
        let v = &self.values;
        for j in 0..ny {
            let row = j * nx;
            for i in 0..nx {
                let k = row + i;
                let west = if i > 0 { v[k - 1] } else { u };
                let east = if i + 1 < nx { v[k + 1] } else { u };
                let south = if j > 0 { v[k - nx] } else { u };
                let north = if j + 1 < ny { v[k + nx] } else { u };
                let next = (centre * v[k] + r * (west + east + south + north)) / (1.0 + dt * uptake[k]);
                // Only rounding can push a convex combination past the boundary value.
                self.scratch[k] = next.min(u);
            }
        }
        std::mem::swap(&mut self.values, &mut self.scratch);
    }
}

pub(crate) fn voxel_index(nx: usize, ny: usize, h: f64, pos: [f64; 2]) -> usize {
    let i = ((pos[0] / h).floor().max(0.0) as usize).min(nx - 1);
    let j = ((pos[1] / h).floor().max(0.0) as usize).min(ny - 1);
    j * nx + i
}

/// Bucketed positions of live cancer cells for neighbour queries.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct CellIndex {
    nx: usize,
    ny: usize,
    size: f64,
    bins: Vec<Vec<u32>>,
}

impl CellIndex {
    pub fn new(width: f64, height: f64, size: f64) -> Self {
        let nx = (width / size).ceil().max(1.0) as usize;
        let ny = (height / size).ceil().max(1.0) as usize;
        CellIndex { nx, ny, size, bins: vec![Vec::new(); nx * ny] }
    }

    fn bin(&self, pos: [f64; 2]) -> usize {
        voxel_index(self.nx, self.ny, self.size, pos)
    }

    pub fn insert(&mut self, id: usize, pos: [f64; 2]) {
        let b = self.bin(pos);
        self.bins[b].push(id as u32);
    }

    pub fn remove(&mut self, id: usize, pos: [f64; 2]) {
        let b = self.bin(pos);
        if let Some(k) = self.bins[b].iter().position(|&x| x as usize == id) {
            // Order within a bin must stay deterministic, so no swap_remove.
            self.bins[b].remove(k);
        }
    }

    /// Ids in all bins overlapping the square of half-width `radius`
    /// around `pos`; callers filter by exact distance.
    pub fn for_each_near(&self, pos: [f64; 2], radius: f64, mut f: impl FnMut(usize)) {
        let lo_i = ((pos[0] - radius) / self.size).floor().max(0.0) as usize;
        let lo_j = ((pos[1] - radius) / self.size).floor().max(0.0) as usize;
        let hi_i = (((pos[0] + radius) / self.size).floor().max(0.0) as usize).min(self.nx - 1);
        let hi_j = (((pos[1] + radius) / self.size).floor().max(0.0) as usize).min(self.ny - 1);
        for j in lo_j..=hi_j {
            for i in lo_i..=hi_i {
                for &id in &self.bins[j * self.nx + i] {
                    f(id as usize);
                }
            }
        }
    }
}
