//! Trains the three Transformer seeds on the same synthetic dataset and
//! prints validation and test recall@5.
//!
//! `cargo run --release --example seed_training -- [steps] [lambda] [lr] [classes] [examples] [data seed]`

use mufasa::data::{generate, DatasetSpec};
use mufasa::space::{seed_genome, SeedKind, Vocabulary};
use mufasa::train::{evaluate_candidate, ModelConfig, TrainConfig};

fn main() -> mufasa::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let steps = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let lambda = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let lr = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(4.23e-4);
    let classes: usize = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(10);
    let num_examples = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(3000);
    let seed = args.get(6).and_then(|s| s.parse().ok()).unwrap_or(0);
    let ds = generate(&DatasetSpec {
        lambda,
        num_classes: classes,
        cat_vocab: 2 * classes + 8,
        notes_vocab: classes + 8,
        num_examples,
        seed,
        ..Default::default()
    })?;
    let vocab = Vocabulary::default();
    let model = ModelConfig::default();
    let cfg = TrainConfig { steps, peak_lr: lr, ..Default::default() };
    println!("lambda {lambda}, {classes} classes, {num_examples} examples, data seed {seed}, {steps} steps, peak lr {lr}");
    for kind in SeedKind::ALL {
        let g = seed_genome(kind, 3, &vocab)?;
        let r = evaluate_candidate(&g, &vocab, &ds, &model, &cfg)?;
        let last = r.train_loss_curve.iter().rev().take(100).sum::<f64>() / 100f64.min(r.train_loss_curve.len() as f64);
        println!(
            "{kind:>6}: params {:>6}  val {:.3}  test {:.3}  final loss {last:.3}  {:.1}s",
            r.parameter_count,
            r.fitness,
            r.test_recall.unwrap_or(f64::NAN),
            r.wall_time
        );
    }
    Ok(())
}
