//! Splits the cost of one training step of a seed model into forward,
//! backward and optimizer time.
//!
//! `cargo run --release --example step_timing -- [early|hybrid|late] [f32|f64]`

use mufasa::data::{generate, DatasetSpec, Example};
use mufasa::graph::compile::{compile, CompileOptions};
use mufasa::space::{seed_genome, SeedKind, Vocabulary};
use mufasa::tensor::{Adam, Mode, Scalar, Tape};
use mufasa::train::{init_model, model_forward, DataShape, ModelConfig};
use std::time::{Duration, Instant};

fn run<T: Scalar>(kind: SeedKind) -> mufasa::Result<()> {
    let ds = generate(&DatasetSpec { num_examples: 500, ..Default::default() })?;
    let vocab = Vocabulary::default();
    let model = ModelConfig::default();
    let g = seed_genome(kind, 3, &vocab)?;
    let graph = compile(&g, &vocab, &model.graph_widths(), ds.spec.seq_len, &CompileOptions::default())?;
    let mut store = init_model::<T>(&graph, &model, DataShape::of(&ds.spec), 0)?;
    let mut adam = Adam::new(&store);
    let batch: Vec<&Example> = ds.train.iter().take(32).collect();
    let labels: Vec<usize> = batch.iter().map(|e| e.label).collect();
    let (mut fwd, mut bwd, mut opt) = (Duration::ZERO, Duration::ZERO, Duration::ZERO);
    let steps = std::env::var("STEPS").ok().and_then(|s| s.parse().ok()).unwrap_or(300);
    for _ in 0..steps {
        let t0 = Instant::now();
        let mut tape = Tape::new();
        let pass = model_forward(&graph, &model, &mut store, &mut tape, &batch, Mode::Train)?;
        let loss = tape.softmax_cross_entropy(pass.logits, &labels)?;
        let t1 = Instant::now();
        let grads = tape.backward(loss)?;
        store.zero_grad();
        for &(id, var) in &pass.params {
            if let Some(gr) = grads.wrt(var) {
                store.accumulate_grad(id, gr);
            }
        }
        let t2 = Instant::now();
        adam.step(&mut store, 1e-3);
        let t3 = Instant::now();
        fwd += t1 - t0;
        bwd += t2 - t1;
        opt += t3 - t2;
    }
    let ms = |d: Duration| d.as_secs_f64() * 1e3 / steps as f64;
    println!(
        "{kind} {} nodes: forward {:.3} ms, backward {:.3} ms, optimizer {:.3} ms per step",
        graph.nodes.len(),
        ms(fwd),
        ms(bwd),
        ms(opt)
    );
    Ok(())
}

fn main() -> mufasa::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let kind = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(SeedKind::Hybrid);
    match args.get(2).map(String::as_str) {
        Some("f64") => run::<f64>(kind),
        _ => run::<f32>(kind),
    }
}
