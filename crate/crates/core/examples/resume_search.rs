//! Stops a surrogate search halfway, resumes it from the checkpoint, and
//! checks the result against an uninterrupted run.
//!
//! `cargo run --example resume_search`

use mufasa::evolution::{run_search, EvaluatorKind, RunOptions, SearchConfig, SurrogateEvaluator};
use mufasa::space::Vocabulary;

fn main() -> mufasa::Result<()> {
    let v = Vocabulary::default();
    let ev = SurrogateEvaluator { vocab: v.clone() };
    let cfg = SearchConfig { population: 20, tournament: 5, candidates: 400, evaluator: EvaluatorKind::Surrogate, seed: 4, ..Default::default() };
    let dir = std::env::temp_dir().join(format!("mufasa-resume-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let ckpt = dir.join("checkpoint.json");

    let full = run_search(&cfg, &v, &ev, &RunOptions::default())?;
    let first = run_search(&cfg, &v, &ev, &RunOptions { checkpoint: Some(ckpt.clone()), halt_after: Some(200), ..Default::default() })?;
    println!("stopped after {} candidates, best so far {:.4}", first.history.len(), first.best.as_ref().map_or(0.0, |b| b.fitness));
    let rest = run_search(&cfg, &v, &ev, &RunOptions { checkpoint: Some(ckpt), resume: true, ..Default::default() })?;
    let same = full.history.iter().zip(&rest.history).all(|(a, b)| a.individual == b.individual);
    println!(
        "resumed to {} candidates, best {:.4}; identical to the uninterrupted run: {same}",
        rest.history.len(),
        rest.best.map_or(0.0, |b| b.fitness)
    );
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
