//! Desk-scale search with trained candidates on the planted task.
//!
//! `cargo run --release --example neural_search -- [multimodal|unimodal] [seed] [candidates] [examples]`

use mufasa::data::generate;
use mufasa::evolution::{run_search, NeuralEvaluator, RunOptions, SearchSpace};
use mufasa::presets::{desk_dataset, desk_model, desk_search, desk_train, routing_for};
use mufasa::space::Vocabulary;

fn main() -> mufasa::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let space: SearchSpace = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(SearchSpace::Multimodal);
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0);
    let mut cfg = desk_search(space, seed);
    if let Some(c) = args.get(3).and_then(|s| s.parse().ok()) {
        cfg.candidates = c;
    }
    let vocab = Vocabulary::default();
    let mut spec = desk_dataset(1.0, seed);
    if let Some(n) = args.get(4).and_then(|s| s.parse().ok()) {
        spec.num_examples = n;
    }
    let ds = generate(&spec)?;
    let evaluator = NeuralEvaluator::new(vocab.clone(), ds, desk_model(routing_for(space)), desk_train(seed));
    let progress = |h: &mufasa::evolution::HistoryEntry| {
        let e = &h.evaluation;
        println!(
            "candidate {:>4} (parent {:>4}): fitness {:.3}  test {:.3}  params {:>6}  {:.1}s{}",
            h.individual.id,
            h.individual.parent_id.unwrap_or(0),
            e.fitness,
            e.test_recall.unwrap_or(f64::NAN),
            e.parameter_count,
            e.wall_time,
            e.rejected.as_deref().map(|r| format!("  rejected: {r}")).unwrap_or_default()
        );
    };
    let out = run_search(&cfg, &vocab, &evaluator, &RunOptions { progress: Some(&progress), ..Default::default() })?;
    let init_best = out.initial.iter().map(|h| h.individual.fitness).fold(0.0, f64::max);
    let best = out.best.expect("at least one candidate");
    println!("{space:?} seed {seed}: best initial {init_best:.3}, best candidate {:.3} (id {}), {} graphs trained", best.fitness, best.id, evaluator.trained());
    Ok(())
}
