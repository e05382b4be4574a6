//! Generates the planted synthetic task and prints one example per split.
//!
//! `cargo run --example gen_data -- [lambda] [examples] [seed]`

use mufasa::data::{generate, DatasetSpec, Example};

fn show(name: &str, e: &Example) {
    println!("{name} example {} (label {}):", e.id, e.label);
    for t in 0..e.seq_len() {
        let values: Vec<String> = e.values[t].iter().map(|v| format!("{v:+.2}")).collect();
        println!("  day {t}: codes {:?} notes {:?} values [{}]", e.codes[t], e.notes[t], values.join(" "));
    }
}

fn main() -> mufasa::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let lambda = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let n = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let seed = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0);
    let ds = generate(&DatasetSpec { lambda, num_examples: n, seed, ..Default::default() })?;
    println!("splits: {} / {} / {}", ds.train.len(), ds.validation.len(), ds.test.len());
    println!("training means {:?}", ds.stats.mean.iter().map(|m| format!("{m:.2}")).collect::<Vec<_>>());
    let mut counts = vec![0; ds.spec.num_classes];
    for e in &ds.train {
        counts[e.label] += 1;
    }
    println!("training label counts {counts:?}");
    show("training", &ds.train[0]);
    show("validation", &ds.validation[0]);
    Ok(())
}
