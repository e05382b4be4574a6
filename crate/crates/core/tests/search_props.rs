use mufasa::evolution::{
    best_so_far, run_search, tournament, Evaluation, Evaluator, EvaluatorKind, Individual, Objective, Population,
    RunOptions, SearchConfig, SearchMode, SearchOutcome, SurrogateEvaluator,
};
use mufasa::space::{seed_genome, Genome, SeedKind, Vocabulary};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

fn surrogate() -> SurrogateEvaluator {
    SurrogateEvaluator { vocab: Vocabulary::default() }
}

fn config(population: usize, tournament: usize, candidates: usize, seed: u64) -> SearchConfig {
    SearchConfig {
        population,
        tournament,
        candidates,
        seed,
        evaluator: EvaluatorKind::Surrogate,
        mode: SearchMode::Sync,
        workers: 1,
        ..Default::default()
    }
}

fn search(cfg: &SearchConfig, ev: &dyn Evaluator, opts: &RunOptions<'_>) -> SearchOutcome {
    run_search(cfg, &Vocabulary::default(), ev, opts).unwrap()
}

/// Everything a replay must reproduce; time stamps and wall times are
/// measurements, not search state.
fn trace(out: &SearchOutcome) -> Vec<(u64, Option<u64>, u64, Vec<usize>)> {
    out.initial
        .iter()
        .chain(&out.history)
        .map(|h| (h.individual.id, h.individual.parent_id, h.individual.fitness.to_bits(), h.individual.genome.encode()))
        .collect()
}

fn blank() -> Genome {
    seed_genome(SeedKind::Early, 1, &Vocabulary::default()).unwrap()
}

fn ids(pop: &Population) -> Vec<u64> {
    pop.members().iter().map(|i| i.id).collect()
}

#[test]
fn same_seed_replays_identically() {
    let cfg = config(20, 5, 150, 7);
    let a = search(&cfg, &surrogate(), &RunOptions::default());
    let b = search(&cfg, &surrogate(), &RunOptions::default());
    assert_eq!(trace(&a), trace(&b));
    assert_eq!(ids(&a.population), ids(&b.population));
    let c = search(&config(20, 5, 150, 8), &surrogate(), &RunOptions::default());
    assert_ne!(trace(&a), trace(&c));
}

#[test]
fn resume_at_every_point_matches_uninterrupted_run() {
    let cfg = config(10, 3, 40, 3);
    let full = search(&cfg, &surrogate(), &RunOptions::default());
    for stop in [1, 7, 20, 39] {
        let dir = tempfile::tempdir().unwrap();
        let ckpt = dir.path().join("checkpoint.json");
        let first = search(
            &cfg,
            &surrogate(),
            &RunOptions { checkpoint: Some(ckpt.clone()), halt_after: Some(stop), ..Default::default() },
        );
        assert!(first.interrupted);
        assert_eq!(first.history.len(), stop);
        let rest = search(&cfg, &surrogate(), &RunOptions { checkpoint: Some(ckpt), resume: true, ..Default::default() });
        assert!(!rest.interrupted);
        assert_eq!(trace(&rest), trace(&full), "resumed after {stop}");
        assert_eq!(ids(&rest.population), ids(&full.population));
    }
}

#[test]
fn resume_keeps_fitness_bits() {
    let cfg = config(20, 5, 400, 4);
    let full = search(&cfg, &surrogate(), &RunOptions::default());
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("checkpoint.json");
    search(&cfg, &surrogate(), &RunOptions { checkpoint: Some(ckpt.clone()), halt_after: Some(200), ..Default::default() });
    let rest = search(&cfg, &surrogate(), &RunOptions { checkpoint: Some(ckpt), resume: true, ..Default::default() });
    assert_eq!(trace(&rest), trace(&full));
}

#[test]
fn resume_with_different_config_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("checkpoint.json");
    let cfg = config(10, 3, 20, 3);
    search(&cfg, &surrogate(), &RunOptions { checkpoint: Some(ckpt.clone()), halt_after: Some(5), ..Default::default() });
    let other = config(10, 4, 20, 3);
    let err = run_search(&other, &Vocabulary::default(), &surrogate(), &RunOptions { checkpoint: Some(ckpt), resume: true, ..Default::default() });
    assert!(matches!(err, Err(mufasa::Error::Config(_))));
}

#[test]
fn population_stays_at_p_and_best_is_monotone() {
    let cfg = config(12, 4, 60, 11);
    for k in [1, 10, 33, 60] {
        let out = search(&cfg, &surrogate(), &RunOptions { halt_after: Some(k), ..Default::default() });
        assert_eq!(out.population.len(), 12);
        let unique: BTreeSet<u64> = ids(&out.population).into_iter().collect();
        assert_eq!(unique.len(), 12);
    }
    let out = search(&cfg, &surrogate(), &RunOptions::default());
    let curve = best_so_far(&out.history);
    assert!(curve.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(out.history.len(), 60);
    let best = out.best.unwrap();
    assert!(out.history.iter().all(|h| h.individual.fitness <= best.fitness));
}

#[test]
fn zero_mutation_rate_freezes_population() {
    let v = Vocabulary::default();
    let seed = seed_genome(SeedKind::Hybrid, 3, &v).unwrap();
    let cfg = SearchConfig { mutation_rate: 0.0, ..config(8, 3, 30, 1) };
    let out = search(&cfg, &surrogate(), &RunOptions::default());
    for m in out.population.members() {
        assert_eq!(m.genome.encode(), seed.encode());
    }
}

#[test]
fn tournament_of_one_is_uniform() {
    let members: Vec<Individual> = (0..10)
        .map(|i| Individual { id: i, genome: blank(), fitness: i as f64, parent_id: None, created_at: None })
        .collect();
    let pop = Population::new(members).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 50_000;
    let mut counts = [0usize; 10];
    for _ in 0..n {
        counts[tournament(&pop, 1, &mut rng, Objective::Max).unwrap()] += 1;
    }
    let e = n as f64 / 10.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    let p = 1.0 - ChiSquared::new(9.0).unwrap().cdf(chi2);
    assert!(p > 0.01, "chi2 {chi2} p {p}");
}

#[test]
fn full_tournament_picks_the_extremes() {
    let members: Vec<Individual> = [0.3, 0.9, 0.1, 0.9]
        .iter()
        .enumerate()
        .map(|(i, &f)| Individual { id: i as u64, genome: blank(), fitness: f, parent_id: None, created_at: None })
        .collect();
    let pop = Population::new(members).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert_eq!(tournament(&pop, 4, &mut rng, Objective::Max).unwrap(), 1);
    assert_eq!(tournament(&pop, 4, &mut rng, Objective::Min).unwrap(), 2);
}

/// Surrogate fitness after a genome-dependent delay, tracking how many
/// evaluations run at once.
struct SlowEvaluator {
    inner: SurrogateEvaluator,
    running: AtomicUsize,
    peak: AtomicUsize,
    calls: AtomicUsize,
}

impl Evaluator for SlowEvaluator {
    fn evaluate(&self, genome: &Genome) -> mufasa::Result<Evaluation> {
        let now = self.running.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak.fetch_max(now, Ordering::SeqCst);
        self.calls.fetch_add(1, Ordering::SeqCst);
        let spread = genome.encode().iter().sum::<usize>() % 5;
        std::thread::sleep(Duration::from_millis(1 + spread as u64));
        let e = self.inner.evaluate(genome);
        self.running.fetch_sub(1, Ordering::SeqCst);
        e
    }

    fn fingerprint(&self) -> String {
        self.inner.fingerprint()
    }
}

#[test]
fn async_workers_respect_limit_and_replace_once_per_child() {
    for workers in [1, 3, 4] {
        let ev = SlowEvaluator { inner: surrogate(), running: AtomicUsize::new(0), peak: AtomicUsize::new(0), calls: AtomicUsize::new(0) };
        let cfg = SearchConfig { mode: SearchMode::Async, workers, ..config(10, 3, 50, 2) };
        let out = search(&cfg, &ev, &RunOptions::default());
        assert!(ev.peak.load(Ordering::SeqCst) <= workers, "peak {} > {workers}", ev.peak.load(Ordering::SeqCst));
        assert_eq!(ev.calls.load(Ordering::SeqCst), 60);
        assert_eq!(out.history.len(), 50);
        assert_eq!(out.population.len(), 10);

        let all: Vec<u64> = out.initial.iter().chain(&out.history).map(|h| h.individual.id).collect();
        let distinct: BTreeSet<u64> = all.iter().copied().collect();
        assert_eq!(distinct.len(), 60);
        let alive: BTreeSet<u64> = ids(&out.population).into_iter().collect();
        assert_eq!(alive.len(), 10);
        assert!(alive.is_subset(&distinct));
        // every completed child removed exactly one member
        assert_eq!(distinct.len() - alive.len(), out.history.len());
        let created: Vec<usize> = out.history.iter().filter_map(|h| h.individual.created_at).collect();
        let created: BTreeSet<usize> = created.into_iter().collect();
        assert_eq!(created, (0..50).collect());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn checkpoint_json_keeps_float_bits(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let text = serde_json::to_string(&x).unwrap();
        let back: f64 = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.to_bits(), x.to_bits());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn any_small_search_keeps_invariants(p in 2usize..12, t_frac in 0.0f64..1.0, c in 1usize..40, seed in any::<u64>()) {
        let t = 1 + ((p - 1) as f64 * t_frac) as usize;
        let out = search(&config(p, t, c, seed), &surrogate(), &RunOptions::default());
        prop_assert_eq!(out.population.len(), p);
        prop_assert_eq!(out.history.len(), c);
        prop_assert_eq!(out.initial.len(), p);
        let curve = best_so_far(&out.history);
        prop_assert!(curve.windows(2).all(|w| w[0] <= w[1]));
        for h in &out.history {
            prop_assert!(h.individual.parent_id.is_some());
        }
    }
}
