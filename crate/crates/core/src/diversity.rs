//! Population diversity: mean pairwise normalized distance, duplicate
//! counting and per-dimension spread.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{Genome, SearchSpace};

/// Default duplicate tolerance, in normalized distance units.
pub const DEFAULT_DUP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityStats {
    /// Mean over unordered pairs; 0 for a single-member population.
    pub mean_pairwise_distance: f64,
    /// Population size minus the number of clusters of near-identical
    /// members (distance <= tolerance, closed transitively).
    pub duplicate_count: usize,
    pub per_dimension_spread: Vec<f64>,
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns true if two distinct sets were merged.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

pub fn diversity(space: &SearchSpace, pop: &[Genome], dup_tol: f64) -> Result<DiversityStats> {
    if pop.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    if !(dup_tol >= 0.0) {
        return Err(Error::Config(format!("duplicate tolerance must be >= 0, got {dup_tol}")));
    }
    for g in pop {
        space.check_len(g.len())?;
    }
    let n = pop.len();
    let mut sets = DisjointSet::new(n);
    let mut clusters = n;
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = space.normalized_distance(&pop[i], &pop[j])?;
            total += d;
            if d <= dup_tol && sets.union(i, j) {
                clusters -= 1;
            }
        }
    }
    let pairs = n * (n - 1) / 2;
    let mean_pairwise_distance = if pairs == 0 { 0.0 } else { total / pairs as f64 };

    let per_dimension_spread = space
        .dimensions()
        .iter()
        .enumerate()
        .map(|(d, dim)| {
            if dim.width() == 0.0 {
                return 0.0;
            }
            let (mn, mx) =
                pop.iter().map(|g| g[d]).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
            (mx - mn) / dim.width()
        })
        .collect();

    Ok(DiversityStats { mean_pairwise_distance, duplicate_count: n - clusters, per_dimension_spread })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn space6() -> SearchSpace {
        SearchSpace::biorobots()
    }

    #[test]
    fn copies_of_one_genome() {
        let s = space6();
        let g = Genome::new(vec![0.5, 0.5, 5.0, 5.0, 5.0, 10.0]);
        let stats = diversity(&s, &vec![g; 20], DEFAULT_DUP_TOL).unwrap();
        assert_eq!(stats.mean_pairwise_distance, 0.0);
        assert_eq!(stats.duplicate_count, 19);
        assert!(stats.per_dimension_spread.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn opposite_corners() {
        let s = space6();
        let pop = vec![Genome::new(s.lower()), Genome::new(s.upper())];
        let stats = diversity(&s, &pop, DEFAULT_DUP_TOL).unwrap();
        assert!((stats.mean_pairwise_distance - 1.0).abs() < 1e-15);
        assert_eq!(stats.duplicate_count, 0);
        assert_eq!(stats.per_dimension_spread, vec![1.0; 6]);
    }

    #[test]
    fn errors() {
        let s = space6();
        assert!(matches!(diversity(&s, &[], 0.0), Err(Error::EmptyPopulation)));
        let g = Genome::new(s.lower());
        assert!(diversity(&s, std::slice::from_ref(&g), -1.0).is_err());
        assert!(diversity(&s, &[Genome::new(vec![0.0])], 0.0).is_err());
        assert_eq!(diversity(&s, &[g], 0.0).unwrap().duplicate_count, 0);
    }

    /// Brute-force clustering: flood fill over the "within tolerance" graph.
    fn duplicate_oracle(s: &SearchSpace, pop: &[Genome], tol: f64) -> usize {
        let n = pop.len();
        let mut label = vec![usize::MAX; n];
        let mut clusters = 0;
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            label[start] = clusters;
            while let Some(u) = stack.pop() {
                for v in 0..n {
                    if label[v] == usize::MAX && s.normalized_distance(&pop[u], &pop[v]).unwrap() <= tol {
                        label[v] = clusters;
                        stack.push(v);
                    }
                }
            }
            clusters += 1;
        }
        n - clusters
    }

    #[test]
    fn duplicate_count_matches_brute_force() {
        let s = space6();
        for seed in 0..50 {
            let mut rng = RngStream::new(seed).rng();
            let base: Vec<Genome> = (0..8).map(|_| s.sample_uniform(&mut rng)).collect();
            // 20 members drawn with replacement from 8 distinct genomes,
            // plus a few near copies to exercise the tolerance.
            let mut pop: Vec<Genome> = (0..20).map(|i| base[(i * 7 + seed as usize) % 8].clone()).collect();
            let mut nudged = pop[0].clone().into_values();
            nudged[0] += 1e-12;
            pop[19] = Genome::new(nudged);
            for tol in [0.0, DEFAULT_DUP_TOL, 0.3] {
                let got = diversity(&s, &pop, tol).unwrap().duplicate_count;
                assert_eq!(got, duplicate_oracle(&s, &pop, tol), "seed {seed} tol {tol}");
            }
        }
    }

    #[test]
    fn random_population_stats_are_in_range() {
        let s = space6();
        let mut rng = RngStream::new(5).rng();
        let pop: Vec<Genome> = (0..20).map(|_| s.sample_uniform(&mut rng)).collect();
        let stats = diversity(&s, &pop, DEFAULT_DUP_TOL).unwrap();
        assert!((0.0..=1.0).contains(&stats.mean_pairwise_distance));
        assert!(stats.duplicate_count <= 19);
        assert_eq!(stats.duplicate_count, duplicate_oracle(&s, &pop, DEFAULT_DUP_TOL));
    }
}
