//! Full-size search (P=100, T=30, C=5000) on the training-free surrogate
//! landscape, over several seeds.
//!
//! `cargo run --release --example surrogate_search -- [runs]`

use mufasa::evolution::{best_so_far, run_search, EvaluatorKind, RunOptions, SearchConfig, SurrogateEvaluator, SURROGATE_OPTIMUM};
use mufasa::space::Vocabulary;
use std::time::Instant;

fn main() -> mufasa::Result<()> {
    let runs: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let vocab = Vocabulary::default();
    let evaluator = SurrogateEvaluator { vocab: vocab.clone() };
    for seed in 0..runs {
        let cfg = SearchConfig { seed, evaluator: EvaluatorKind::Surrogate, ..Default::default() };
        let start = Instant::now();
        let out = run_search(&cfg, &vocab, &evaluator, &RunOptions::default())?;
        let curve = best_so_far(&out.history);
        let best = out.best.map(|b| b.fitness).unwrap_or(0.0);
        println!(
            "seed {seed}: best {best:.4} ({:.1}% of optimum), after 1000/2500/5000: {:.3}/{:.3}/{:.3}, {:.1}s",
            100.0 * best / SURROGATE_OPTIMUM,
            curve[999],
            curve[2499],
            curve[4999],
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
