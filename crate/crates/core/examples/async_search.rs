//! Asynchronous search with several workers on the surrogate landscape,
//! with a delay standing in for training time.
//!
//! `cargo run --release --example async_search -- [workers]`

use mufasa::evolution::{run_search, Evaluation, Evaluator, RunOptions, SearchConfig, SearchMode, SurrogateEvaluator};
use mufasa::space::{Genome, Vocabulary};
use std::time::{Duration, Instant};

struct Delayed(SurrogateEvaluator);

impl Evaluator for Delayed {
    fn evaluate(&self, genome: &Genome) -> mufasa::Result<Evaluation> {
        std::thread::sleep(Duration::from_millis(2 + genome.encode().iter().sum::<usize>() as u64 % 8));
        self.0.evaluate(genome)
    }

    fn fingerprint(&self) -> String {
        self.0.fingerprint()
    }
}

fn main() -> mufasa::Result<()> {
    let workers = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let v = Vocabulary::default();
    let ev = Delayed(SurrogateEvaluator { vocab: v.clone() });
    for (mode, w) in [(SearchMode::Sync, 1), (SearchMode::Async, workers)] {
        let cfg = SearchConfig { population: 30, tournament: 8, candidates: 300, mode, workers: w, ..Default::default() };
        let start = Instant::now();
        let out = run_search(&cfg, &v, &ev, &RunOptions::default())?;
        println!(
            "{mode:?} with {w} workers: best {:.4}, {} candidates, {:.2}s",
            out.best.map_or(0.0, |b| b.fitness),
            out.history.len(),
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
