//! Box-bounded real search spaces and the genomes that live in them.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub unit: String,
}

impl Dimension {
    pub fn new(name: impl Into<String>, lo: f64, hi: f64, unit: impl Into<String>) -> Self {
        Dimension { name: name.into(), lo, hi, unit: unit.into() }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// The feasible box. Construction validates the bounds, so every
/// `SearchSpace` in circulation has `D >= 1` and finite `lo <= hi`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchSpace {
    dims: Vec<Dimension>,
}

impl<'de> Deserialize<'de> for SearchSpace {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            dims: Vec<Dimension>,
        }
        let raw = Raw::deserialize(deserializer)?;
        SearchSpace::with_dimensions(raw.dims).map_err(serde::de::Error::custom)
    }
}

/// How out-of-box vectors are brought back into the feasible region.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundHandling {
    #[default]
    Clamp,
    /// Mirror at the violated bound, falling back to clamping if the
    /// mirrored value still lies outside.
    Reflect,
}

impl SearchSpace {
    /// Anonymous dimensions named `x0`, `x1`, ...
    pub fn new(bounds: &[(f64, f64)]) -> Result<Self> {
        Self::with_dimensions(
            bounds.iter().enumerate().map(|(d, &(lo, hi))| Dimension::new(format!("x{d}"), lo, hi, "")).collect(),
        )
    }

    pub fn with_dimensions(dims: Vec<Dimension>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::EmptySpace);
        }
        for (d, dim) in dims.iter().enumerate() {
            if !dim.lo.is_finite() || !dim.hi.is_finite() || dim.lo > dim.hi {
                return Err(Error::Bounds { dim: d, lo: dim.lo, hi: dim.hi });
            }
        }
        Ok(SearchSpace { dims })
    }

    /// `[lo, hi]^d`.
    pub fn cube(d: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(&vec![(lo, hi); d])
    }

    /// The six nanoparticle design parameters of the biorobots scenario.
    pub fn biorobots() -> Self {
        Self::with_dimensions(vec![
            Dimension::new("attached_worker_migration_bias", 0.0, 1.0, ""),
            Dimension::new("unattached_worker_migration_bias", 0.0, 1.0, ""),
            Dimension::new("worker_relative_adhesion", 0.0, 10.0, ""),
            Dimension::new("worker_relative_repulsion", 0.0, 10.0, ""),
            Dimension::new("worker_motility_persistence_time", 0.0, 10.0, "min"),
            Dimension::new("cargo_release_o2_threshold", 0.0, 20.0, "mmHg"),
        ])
        .expect("static bounds are valid")
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn dimensions(&self) -> &[Dimension] {
        &self.dims
    }

    pub fn lower(&self) -> Vec<f64> {
        self.dims.iter().map(|d| d.lo).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.dims.iter().map(|d| d.hi).collect()
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: len });
        }
        Ok(())
    }

    pub fn contains(&self, g: &Genome) -> bool {
        g.len() == self.dim() && self.dims.iter().zip(g.values()).all(|(d, &x)| d.lo <= x && x <= d.hi)
    }

    /// Errors with the first offending component.
    pub fn check_feasible(&self, g: &Genome) -> Result<()> {
        self.check_len(g.len())?;
        for (d, (dim, &x)) in self.dims.iter().zip(g.values()).enumerate() {
            if !(dim.lo <= x && x <= dim.hi) {
                return Err(Error::OutOfBoundsGenome { dim: d, value: x, lo: dim.lo, hi: dim.hi });
            }
        }
        Ok(())
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Genome {
        Genome(
            self.dims
                .iter()
                .map(|d| {
                    if d.lo == d.hi {
                        d.lo
                    } else {
                        // lo + u*(hi-lo) can round past hi for u close to 1.
                        (d.lo + rng.random::<f64>() * d.width()).min(d.hi)
                    }
                })
                .collect(),
        )
    }

    pub fn sample_from_stream(&self, stream: &RngStream) -> Genome {
        self.sample_uniform(&mut stream.rng())
    }

    pub fn repair_clamp(&self, v: &[f64]) -> Result<Genome> {
        self.repair(v, BoundHandling::Clamp)
    }

    pub fn repair(&self, v: &[f64], mode: BoundHandling) -> Result<Genome> {
        self.check_len(v.len())?;
        Ok(Genome(
            self.dims
                .iter()
                .zip(v)
                .map(|(d, &x)| {
                    let x = match mode {
                        BoundHandling::Clamp => x,
                        BoundHandling::Reflect if x < d.lo => 2.0 * d.lo - x,
                        BoundHandling::Reflect if x > d.hi => 2.0 * d.hi - x,
                        BoundHandling::Reflect => x,
                    };
                    x.clamp(d.lo, d.hi)
                })
                .collect(),
        ))
    }

    /// Maps a genome into the unit cube; zero-width dimensions map to 0.
    pub fn normalize(&self, g: &Genome) -> Result<Vec<f64>> {
        self.check_len(g.len())?;
        Ok(self
            .dims
            .iter()
            .zip(g.values())
            .map(|(d, &x)| if d.width() > 0.0 { (x - d.lo) / d.width() } else { 0.0 })
            .collect())
    }

    /// Euclidean distance between range-normalized coordinates, divided by
    /// `sqrt(D)` so that opposite corners of the box are at distance 1.
    pub fn normalized_distance(&self, a: &Genome, b: &Genome) -> Result<f64> {
        self.check_len(a.len())?;
        self.check_len(b.len())?;
        let sq: f64 = self
            .dims
            .iter()
            .zip(a.values().iter().zip(b.values()))
            .map(|(d, (&x, &y))| {
                let w = d.width();
                if w > 0.0 {
                    let t = (x - y) / w;
                    t * t
                } else {
                    0.0
                }
            })
            .sum();
        Ok((sq / self.dim() as f64).sqrt())
    }
}

/// A candidate design: one real value per dimension of its search space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Genome(Vec<f64>);

impl Genome {
    pub fn new(values: Vec<f64>) -> Self {
        Genome(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<f64>> for Genome {
    fn from(v: Vec<f64>) -> Self {
        Genome(v)
    }
}

impl std::ops::Index<usize> for Genome {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn design_bounds() -> Vec<(f64, f64)> {
        vec![(0.0, 1.0), (0.0, 1.0), (0.0, 10.0), (0.0, 10.0), (0.0, 10.0), (0.0, 20.0)]
    }

    #[test]
    fn design_space_has_six_dims() {
        let s = SearchSpace::new(&design_bounds()).unwrap();
        assert_eq!(s.dim(), 6);
        assert_eq!(s.upper(), vec![1.0, 1.0, 10.0, 10.0, 10.0, 20.0]);
        assert_eq!(SearchSpace::biorobots().upper(), s.upper());
        assert_eq!(SearchSpace::biorobots().lower(), s.lower());
    }

    #[test]
    fn degenerate_and_invalid_bounds() {
        let s = SearchSpace::new(&[(2.0, 2.0)]).unwrap();
        let mut rng = RngStream::new(3).rng();
        for _ in 0..100 {
            assert_eq!(s.sample_uniform(&mut rng).values(), &[2.0]);
        }
        assert!(matches!(SearchSpace::new(&[(1.0, 0.0)]), Err(Error::Bounds { dim: 0, .. })));
        assert!(matches!(SearchSpace::new(&[(0.0, f64::INFINITY)]), Err(Error::Bounds { .. })));
        assert!(matches!(SearchSpace::new(&[(f64::NAN, 1.0)]), Err(Error::Bounds { .. })));
        assert!(matches!(SearchSpace::new(&[]), Err(Error::EmptySpace)));
    }

    #[test]
    fn deserialize_validates() {
        let ok: SearchSpace = serde_json::from_str(r#"{"dims":[{"name":"a","lo":0,"hi":1}]}"#).unwrap();
        assert_eq!(ok.dim(), 1);
        assert!(serde_json::from_str::<SearchSpace>(r#"{"dims":[{"name":"a","lo":2,"hi":1}]}"#).is_err());
        assert!(serde_json::from_str::<SearchSpace>(r#"{"dims":[]}"#).is_err());
    }

    #[test]
    fn clamp_examples() {
        let unit = SearchSpace::new(&[(0.0, 1.0)]).unwrap();
        assert_eq!(unit.repair_clamp(&[0.5]).unwrap().values(), &[0.5]);
        assert_eq!(unit.repair_clamp(&[1.2]).unwrap().values(), &[1.0]);
        let ten = SearchSpace::new(&[(0.0, 10.0)]).unwrap();
        assert_eq!(ten.repair_clamp(&[-3.0]).unwrap().values(), &[0.0]);
        assert!(matches!(unit.repair_clamp(&[0.1, 0.2]), Err(Error::DimensionMismatch { expected: 1, actual: 2 })));
    }

    #[test]
    fn reflect_mirrors_then_clamps() {
        let s = SearchSpace::new(&[(0.0, 10.0)]).unwrap();
        assert_eq!(s.repair(&[-3.0], BoundHandling::Reflect).unwrap().values(), &[3.0]);
        assert_eq!(s.repair(&[12.0], BoundHandling::Reflect).unwrap().values(), &[8.0]);
        assert_eq!(s.repair(&[25.0], BoundHandling::Reflect).unwrap().values(), &[0.0]);
    }

    #[test]
    fn distance_examples() {
        let s = SearchSpace::new(&design_bounds()).unwrap();
        let lo = Genome::new(s.lower());
        let hi = Genome::new(s.upper());
        assert_eq!(s.normalized_distance(&lo, &lo).unwrap(), 0.0);
        assert!((s.normalized_distance(&lo, &hi).unwrap() - 1.0).abs() < 1e-15);
        let frozen = SearchSpace::new(&[(0.0, 1.0), (3.0, 3.0)]).unwrap();
        let a = Genome::new(vec![0.0, 3.0]);
        let b = Genome::new(vec![1.0, 3.0]);
        assert!((frozen.normalized_distance(&a, &b).unwrap() - (0.5f64).sqrt()).abs() < 1e-15);
        assert!(s.normalized_distance(&lo, &Genome::new(vec![0.0])).is_err());
    }

    // Independent restatement of the distance definition.
    fn distance_oracle(lo: &[f64], hi: &[f64], a: &[f64], b: &[f64]) -> f64 {
        let mut acc = 0.0;
        for d in 0..lo.len() {
            let r = hi[d] - lo[d];
            if r > 0.0 {
                let na = (a[d] - lo[d]) / r;
                let nb = (b[d] - lo[d]) / r;
                acc += (na - nb).powi(2);
            }
        }
        (acc / lo.len() as f64).sqrt()
    }

    #[test]
    fn distance_matches_oracle_on_random_pairs() {
        let s = SearchSpace::new(&design_bounds()).unwrap();
        let mut rng = RngStream::new(11).rng();
        for _ in 0..1000 {
            let a = s.sample_uniform(&mut rng);
            let b = s.sample_uniform(&mut rng);
            let got = s.normalized_distance(&a, &b).unwrap();
            let want = distance_oracle(&s.lower(), &s.upper(), a.values(), b.values());
            assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn uniform_sampling_passes_ks() {
        let s = SearchSpace::new(&[(0.0, 1.0)]).unwrap();
        let mut rng = RngStream::new(2024).rng();
        let n = 100_000;
        let mut xs: Vec<f64> = (0..n).map(|_| s.sample_uniform(&mut rng)[0]).collect();
        xs.sort_by(f64::total_cmp);
        let d = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| ((i + 1) as f64 / n as f64 - x).max(x - i as f64 / n as f64))
            .fold(0.0, f64::max);
        // Asymptotic 99% Kolmogorov-Smirnov critical value.
        let crit = 1.628 / (n as f64).sqrt();
        assert!(d < crit, "KS statistic {d} >= {crit}");
    }

    fn box_and_vector() -> impl Strategy<Value = (SearchSpace, Vec<f64>)> {
        (1usize..8)
            .prop_flat_map(|d| {
                (prop::collection::vec((-100.0f64..100.0, 0.0f64..50.0), d), prop::collection::vec(-200.0f64..200.0, d))
            })
            .prop_map(|(b, v)| {
                let bounds: Vec<_> = b.iter().map(|&(lo, w)| (lo, lo + w)).collect();
                (SearchSpace::new(&bounds).unwrap(), v)
            })
    }

    proptest! {
        #[test]
        fn repair_contains_and_is_idempotent((space, v) in box_and_vector()) {
            for mode in [BoundHandling::Clamp, BoundHandling::Reflect] {
                let once = space.repair(&v, mode).unwrap();
                prop_assert!(space.contains(&once));
                for (d, dim) in space.dimensions().iter().enumerate() {
                    prop_assert!(dim.lo <= once[d] && once[d] <= dim.hi);
                    if dim.lo <= v[d] && v[d] <= dim.hi {
                        prop_assert_eq!(once[d], v[d]);
                    }
                }
                let twice = space.repair(once.values(), mode).unwrap();
                prop_assert_eq!(once, twice);
            }
        }

        #[test]
        fn sampled_genomes_are_contained((space, _) in box_and_vector(), seed in any::<u64>()) {
            let mut rng = RngStream::new(seed).rng();
            for _ in 0..16 {
                let g = space.sample_uniform(&mut rng);
                prop_assert!(space.contains(&g));
            }
        }

        #[test]
        fn distance_is_a_metric((space, _) in box_and_vector(), seed in any::<u64>()) {
            let mut rng = RngStream::new(seed).rng();
            let a = space.sample_uniform(&mut rng);
            let b = space.sample_uniform(&mut rng);
            let c = space.sample_uniform(&mut rng);
            let dab = space.normalized_distance(&a, &b).unwrap();
            let dba = space.normalized_distance(&b, &a).unwrap();
            let dbc = space.normalized_distance(&b, &c).unwrap();
            let dac = space.normalized_distance(&a, &c).unwrap();
            prop_assert_eq!(dab, dba);
            prop_assert!(dac <= dab + dbc + 1e-9);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&dab));
            prop_assert_eq!(space.normalized_distance(&a, &a).unwrap(), 0.0);
            // Identity of indiscernibles where every dimension has width.
            if space.dimensions().iter().all(|d| d.width() > 0.0) && a != b {
                prop_assert!(dab > 0.0);
            }
        }
    }
}
