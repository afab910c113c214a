use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use dedrug::objectives::{BudgetLedger, Objective, ObjectiveSpec};
use dedrug::optimizers::*;
use dedrug::{Error, Genome, Result, RngStream, SearchSpace};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Upper 99% quantile of the chi-square distribution.
fn chi2_99(df: usize) -> f64 {
    ChiSquared::new(df as f64).unwrap().inverse_cdf(0.99)
}

fn chi2(counts: &[u64], expected: f64) -> f64 {
    counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum()
}

/// Two-sided 99% normal-approximation band for a binomial proportion.
fn within_99(successes: u64, n: u64, p: f64) -> bool {
    let sd = (p * (1.0 - p) / n as f64).sqrt();
    ((successes as f64 / n as f64) - p).abs() <= 2.5758 * sd
}

#[test]
fn de_triples_are_uniform() {
    let (p, n) = (20usize, 100_000u64);
    let mut rng = RngStream::new(11).rng();
    let mut counts: HashMap<[usize; 3], u64> = HashMap::new();
    for _ in 0..n {
        *counts.entry(de_mutation_indices(p, 0, &mut rng).unwrap()).or_default() += 1;
    }
    let cells = 19 * 18 * 17;
    assert_eq!(counts.len(), cells, "every valid triple appears");
    assert!(counts.keys().all(|t| !t.contains(&0)));
    let v: Vec<u64> = counts.values().copied().collect();
    let stat = chi2(&v, n as f64 / cells as f64);
    assert!(stat < chi2_99(cells - 1), "chi2 {stat}");
}

#[test]
fn zero_difference_returns_base() {
    let base = [0.25, -3.0, 9.0];
    let same = [1.0, 2.0, 3.0];
    for f in [0.0, 0.5, 2.0, 1e6] {
        assert_eq!(rand1_mutant(&base, &same, &same, f), base.to_vec());
    }
}

#[test]
fn binomial_crossover_gene_rate() {
    let (d, n, cr) = (6usize, 100_000u64, 0.9);
    let target = Genome::new(vec![0.0; d]);
    let mutant = Genome::new(vec![1.0; d]);
    let mut rng = RngStream::new(12).rng();
    let mut per_gene = vec![0u64; d];
    for _ in 0..n {
        let t = de_crossover_binomial(&target, &mutant, cr, &mut rng).unwrap();
        for (j, &v) in t.values().iter().enumerate() {
            per_gene[j] += (v == 1.0) as u64;
        }
    }
    let p = cr + (1.0 - cr) / d as f64;
    for (j, &c) in per_gene.iter().enumerate() {
        assert!(within_99(c, n, p), "gene {j}: {}", c as f64 / n as f64);
    }
}

#[test]
fn trial_differs_from_target_when_mutant_differs() {
    let mut rng = RngStream::new(13).rng();
    let target = Genome::new(vec![0.0; 5]);
    for j in 0..5 {
        let mut m = vec![0.0; 5];
        m[j] = 1.0;
        let mutant = Genome::new(m);
        for cr in [0.0, 0.3, 1.0] {
            for _ in 0..20 {
                let t = de_crossover_binomial(&target, &mutant, cr, &mut rng).unwrap();
                if cr == 1.0 {
                    assert_eq!(t, mutant);
                }
                assert!(t.values().iter().all(|&x| x == 0.0 || x == 1.0));
            }
        }
    }
    // Fully distinct mutant: at least one gene always taken.
    let mutant = Genome::new(vec![1.0; 5]);
    for _ in 0..1000 {
        assert_ne!(de_crossover_binomial(&target, &mutant, 0.0, &mut rng).unwrap(), target);
    }
}

#[test]
fn single_candidate_tournament_is_uniform() {
    let fitness: Vec<f64> = (0..10).map(|i| i as f64).collect();
    let n = 100_000u64;
    let mut rng = RngStream::new(14).rng();
    let mut counts = vec![0u64; 10];
    for _ in 0..n {
        counts[ga_tournament(&fitness, 1, &mut rng, TournamentMode::Select, None).unwrap()] += 1;
    }
    assert!(chi2(&counts, n as f64 / 10.0) < chi2_99(9));
}

#[test]
fn binary_tournament_win_probabilities() {
    // With T=2 over distinct ranks, the member of rank k (0 = best) among
    // P wins a select tournament with probability 2(P-1-k) / (P(P-1)).
    let p = 5usize;
    let fitness: Vec<f64> = (0..p).map(|i| i as f64).collect();
    let n = 100_000u64;
    let mut rng = RngStream::new(15).rng();
    let mut counts = vec![0u64; p];
    for _ in 0..n {
        counts[ga_tournament(&fitness, 2, &mut rng, TournamentMode::Select, None).unwrap()] += 1;
    }
    for (k, &c) in counts.iter().enumerate() {
        let expect = 2.0 * (p - 1 - k) as f64 / (p * (p - 1)) as f64;
        if expect == 0.0 {
            assert_eq!(c, 0);
        } else {
            assert!(within_99(c, n, expect), "rank {k}");
        }
    }
}

#[test]
fn uniform_crossover_mixing_rate() {
    let (d, n, x) = (6usize, 100_000u64, 0.8);
    let p1 = Genome::new(vec![0.0; d]);
    let p2 = Genome::new(vec![1.0; d]);
    let mut rng = RngStream::new(16).rng();
    let mut mixed = 0u64;
    for _ in 0..n {
        let c = ga_uniform_crossover(&p1, &p2, x, &mut rng).unwrap();
        let ones = c.values().iter().filter(|&&v| v == 1.0).count();
        mixed += (ones > 0 && ones < d) as u64;
    }
    let p = x * (1.0 - 2.0 * 0.5f64.powi(d as i32));
    assert!(within_99(mixed, n, p), "{}", mixed as f64 / n as f64);
}

#[test]
fn ga_mutation_rate_and_step() {
    let space = SearchSpace::cube(10, 0.0, 100.0).unwrap();
    let g = Genome::new(vec![50.0; 10]);
    let mut rng = RngStream::new(17).rng();
    let (mut changed, mut total) = (0u64, 0u64);
    for _ in 0..10_000 {
        let m = ga_mutate(&space, &g, 0.2, (-0.05, 0.05), &mut rng).unwrap();
        for &v in m.values() {
            assert!((v - 50.0).abs() <= 5.0);
            changed += (v != 50.0) as u64;
            total += 1;
        }
    }
    assert!(within_99(changed, total, 0.2), "{}", changed as f64 / total as f64);
}

#[test]
fn init_population_is_feasible_and_reproducible() {
    let space = SearchSpace::biorobots();
    let stream = RngStream::new(5);
    let pop = init_population(&space, 20, &stream);
    assert_eq!(pop.len(), 20);
    assert!(pop.iter().all(|g| space.contains(g)));
    assert_eq!(pop, init_population(&space, 20, &stream));
}

#[test]
fn init_from_preserves_order() {
    let spec = ObjectiveSpec::sphere(3).unwrap();
    let genomes = init_population(&spec.space, 20, &RngStream::new(9));
    let ledger = BudgetLedger::new(100);
    let state = init_from(&spec, genomes.clone(), &RngStream::new(1), &ledger).unwrap();
    assert_eq!(state.genomes(), genomes);
    assert_eq!(state.history.len(), 20);
    assert_eq!(ledger.design_evals_used(), 20);
    let out_of_box = vec![Genome::new(vec![9.0, 0.0, 0.0])];
    assert!(init_from(&spec, out_of_box, &RngStream::new(1), &ledger).is_err());
}

fn de(p: usize) -> Algorithm {
    Algorithm::De(DeConfig { population_size: p, record_mutations: true, ..DeConfig::default() })
}

fn ga(p: usize) -> Algorithm {
    Algorithm::Ga(GaConfig { population_size: p, ..GaConfig::default() })
}

#[test]
fn generation_counts_follow_the_budget() {
    let spec = ObjectiveSpec::sphere(4).unwrap();
    let root = RngStream::new(3);
    let gens = |alg: &Algorithm, budget: u64| -> Vec<(u64, bool)> {
        let log = run(alg, &spec, budget, &root, None).unwrap();
        assert_eq!(log.history.len() as u64, budget);
        assert_eq!(log.ledger.design_evals_used, budget);
        log.generations.iter().map(|g| (g.generation, g.partial)).collect()
    };
    for alg in [de(20), ga(20)] {
        assert_eq!(gens(&alg, 0), vec![]);
        assert_eq!(gens(&alg, 20), vec![(0, false)]);
        assert_eq!(gens(&alg, 40), vec![(0, false), (1, false)]);
        assert_eq!(gens(&alg, 47), vec![(0, false), (1, false), (2, true)]);
        assert_eq!(gens(&alg, 200).len(), 10);
        assert_eq!(gens(&alg, 7), vec![(0, true)]);
    }
}

#[test]
fn sim_runs_grow_by_p_times_r_per_generation() {
    let spec = ObjectiveSpec::sphere(6).unwrap().with_replicates(5);
    let log = run(&de(20), &spec, 200, &RngStream::new(8), None).unwrap();
    let sims: Vec<u64> = log.generations.iter().map(|g| g.sim_runs).collect();
    assert_eq!(sims[0], 100);
    assert!(sims.windows(2).all(|w| w[1] - w[0] == 100));
    assert_eq!(log.ledger.sim_runs_used, 1000);
}

#[test]
fn shared_initial_population_gives_identical_generation_zero() {
    let spec = ObjectiveSpec::rastrigin(6).unwrap().with_replicates(3);
    let root = RngStream::new(21);
    let init = init_population(&spec.space, 20, &RngStream::new(77));
    let a = run(&de(20), &spec, 60, &root, Some(&init)).unwrap();
    let b = run(&ga(20), &spec, 60, &root, Some(&init)).unwrap();
    assert_eq!(a.generations[0].avg_fitness, b.generations[0].avg_fitness);
    assert_eq!(a.initial_population(), b.initial_population());
    let genomes: Vec<Genome> = a.initial_population().iter().map(|e| e.genome.clone()).collect();
    assert_eq!(genomes, init);
}

#[test]
fn full_run_replays_bit_for_bit_across_thread_counts() {
    let spec = ObjectiveSpec::rastrigin(6).unwrap().with_replicates(2);
    for alg in [de(20), ga(20), Algorithm::RandomSearch(RandomSearchConfig::default())] {
        let go = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| run(&alg, &spec, 200, &RngStream::new(99), None).unwrap())
        };
        let (a, b) = (go(1), go(4));
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}

#[test]
fn de_improves_on_sphere_for_every_seed() {
    let spec = ObjectiveSpec::sphere(6).unwrap();
    for seed in 0..20 {
        let log = run(&de(20), &spec, 200, &RngStream::new(seed), None).unwrap();
        let initial_best = log.generations[0].best_fitness;
        assert!(log.best_fitness().unwrap() < initial_best, "seed {seed}");
    }
}

#[test]
fn f_zero_cr_one_resamples_population() {
    let spec = ObjectiveSpec::sphere(3).unwrap();
    let cfg = DeConfig { scaling_factor: 0.0, crossover_rate: 1.0, ..DeConfig::default() };
    let root = RngStream::new(4);
    let ledger = BudgetLedger::new(100);
    let genomes = init_population(&spec.space, 20, &RngStream::new(5));
    let mut state = init_from(&spec, genomes.clone(), &root, &ledger).unwrap();
    de_generation(&mut state, &spec, &cfg, &ledger, &root).unwrap();
    for trial in &state.history[20..] {
        assert!(genomes.contains(&trial.genome));
    }
}

#[test]
fn de_generation_rejects_exhausted_budget() {
    let spec = ObjectiveSpec::sphere(3).unwrap();
    let root = RngStream::new(4);
    let ledger = BudgetLedger::new(20);
    let mut state = init_from(&spec, init_population(&spec.space, 20, &root), &root, &ledger).unwrap();
    assert!(matches!(
        de_generation(&mut state, &spec, &DeConfig::default(), &ledger, &root),
        Err(Error::BudgetExhausted { .. })
    ));
    assert!(matches!(
        ga_step(&mut state, &spec, &GaConfig::default(), &ledger, &root, 0),
        Err(Error::BudgetExhausted { .. })
    ));
}

#[test]
fn ga_step_keeps_the_best_and_costs_one_evaluation() {
    let spec = ObjectiveSpec::rastrigin(4).unwrap();
    let root = RngStream::new(6);
    let ledger = BudgetLedger::new(1000);
    let mut state = init_from(&spec, init_population(&spec.space, 20, &root), &root, &ledger).unwrap();
    let cfg = GaConfig::default();
    for step in 0..500 {
        let best_before = state.population[best_index(&state.population)].clone();
        let used = ledger.design_evals_used();
        let victim = ga_step(&mut state, &spec, &cfg, &ledger, &root, step).unwrap();
        assert_eq!(ledger.design_evals_used(), used + 1);
        assert_ne!(state.population[victim], best_before);
        assert!(state.population.contains(&best_before));
        assert_eq!(state.best_ever.value(), state.history_min());
    }
}

trait HistoryMin {
    fn history_min(&self) -> f64;
}

impl HistoryMin for OptimizerState {
    fn history_min(&self) -> f64 {
        self.history.iter().map(|e| e.value()).fold(f64::INFINITY, f64::min)
    }
}

/// Sphere that fails permanently after a number of successful replicates.
struct Flaky {
    space: SearchSpace,
    ok_calls: usize,
    calls: AtomicUsize,
}

impl Objective for Flaky {
    fn space(&self) -> &SearchSpace {
        &self.space
    }
    fn replicates(&self) -> usize {
        1
    }
    fn evaluate_once(&self, genome: &Genome, _seed: &RngStream) -> Result<f64> {
        if self.calls.fetch_add(1, Ordering::SeqCst) >= self.ok_calls {
            return Err(Error::NumericalInstability { time: 0.0, what: "test".into() });
        }
        Ok(genome.values().iter().map(|x| x * x).sum())
    }
}

#[test]
fn evaluator_failure_keeps_the_partial_log() {
    let flaky = Flaky { space: SearchSpace::cube(3, -1.0, 1.0).unwrap(), ok_calls: 45, calls: AtomicUsize::new(0) };
    let failure = run(&ga(20), &flaky, 200, &RngStream::new(1), None).unwrap_err();
    assert!(failure.error.is_evaluator_failure());
    let log = failure.log;
    assert_eq!(log.history.len(), 45);
    assert_eq!(log.ledger.design_evals_used, 45);
    assert_eq!(log.generations.iter().map(|g| g.generation).collect::<Vec<_>>(), vec![0, 1, 2]);
    assert!(log.generations[2].partial);
    assert_eq!(log.final_population.len(), 20);
}

/// NaN everywhere except the origin's neighbourhood.
struct NanAway {
    space: SearchSpace,
}

impl Objective for NanAway {
    fn space(&self) -> &SearchSpace {
        &self.space
    }
    fn replicates(&self) -> usize {
        1
    }
    fn evaluate_once(&self, genome: &Genome, _seed: &RngStream) -> Result<f64> {
        let r2: f64 = genome.values().iter().map(|x| x * x).sum();
        Ok(if r2 > 0.5 { f64::NAN } else { r2 })
    }
}

#[test]
fn nan_trials_never_displace_targets() {
    let obj = NanAway { space: SearchSpace::cube(2, -1.0, 1.0).unwrap() };
    let log = run(&de(10), &obj, 200, &RngStream::new(2), None).unwrap();
    assert!(!log.diagnostics.is_empty());
    assert!(log.best_fitness().unwrap().is_finite());
    let series = log.best_fitness_series();
    assert!(series.windows(2).all(|w| w[1] <= w[0]));
}

fn check_log_invariants(log: &dedrug::RunLog, space: &SearchSpace, budget: u64) {
    assert_eq!(log.history.len() as u64, log.ledger.design_evals_used);
    assert!(log.ledger.design_evals_used <= budget);
    assert!(log.history.iter().all(|e| space.contains(&e.genome)));
    let best = log.best_fitness_series();
    assert!(best.windows(2).all(|w| w[1] <= w[0]), "{best:?}");
    if let Some(b) = log.best_fitness() {
        assert_eq!(b, log.history_min().unwrap());
    }
    if let Some(last) = log.generations.last() {
        let mean = dedrug::harness::mean_fitness(&log.final_population);
        assert!((last.avg_fitness - mean).abs() <= 1e-12 * mean.abs().max(1.0));
    }
    for ev in &log.mutation_events {
        let all = [ev.target, ev.r1, ev.r2, ev.r3];
        for i in 0..4 {
            for j in (i + 1)..4 {
                assert_ne!(all[i], all[j]);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn run_logs_satisfy_invariants(seed in any::<u64>(), budget in 0u64..150, p in 4usize..12, which in 0usize..3, d in 1usize..5) {
        let spec = ObjectiveSpec::rastrigin(d).unwrap();
        let alg = match which {
            0 => de(p),
            1 => ga(p),
            _ => Algorithm::RandomSearch(RandomSearchConfig { population_size: p }),
        };
        let log = run(&alg, &spec, budget, &RngStream::new(seed), None).unwrap();
        check_log_invariants(&log, &spec.space, budget);
        prop_assert_eq!(log.ledger.design_evals_used, budget);
        if which == 0 && budget as usize >= p {
            prop_assert_eq!(log.mutation_events.len(), budget as usize - p);
        }
    }

    #[test]
    fn de_mutant_is_always_feasible(seed in any::<u64>(), f in 0.0f64..3.0, target in 0usize..8) {
        let space = SearchSpace::new(&[(-1.0, 2.0), (0.0, 1e-3), (5.0, 50.0)]).unwrap();
        let pop = init_population(&space, 8, &RngStream::new(seed));
        let mut rng = RngStream::new(seed ^ 1).rng();
        let (v, _) = de_mutate(&space, &pop, target, f, dedrug::BoundHandling::Clamp, &mut rng).unwrap();
        prop_assert!(space.contains(&v));
        let (w, _) = de_mutate(&space, &pop, target, f, dedrug::BoundHandling::Reflect, &mut rng).unwrap();
        prop_assert!(space.contains(&w));
    }
}
