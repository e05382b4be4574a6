//! Per-field flip frequencies of point mutation on the hybrid seed.
//!
//! `cargo run --release --example mutation_stats -- [trials] [rng seed]`

use mufasa::space::{mutate, seed_genome, SeedKind, Vocabulary};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let trials: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0);
    let rate = 0.01875;
    let v = Vocabulary::default();
    let g = seed_genome(SeedKind::Hybrid, 3, &v).unwrap();
    let base = g.encode();
    let kinds = g.field_kinds();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flips = vec![0u64; base.len()];
    for _ in 0..trials {
        for (i, (a, b)) in mutate(&g, &v, rate, &mut rng).encode().iter().zip(&base).enumerate() {
            if a != b {
                flips[i] += 1;
            }
        }
    }
    let expected = trials as f64 * rate;
    let sd = (expected * (1.0 - rate)).sqrt();
    let mut chi2 = 0.0;
    for (i, &f) in flips.iter().enumerate() {
        let z = (f as f64 - expected) / sd;
        chi2 += z * z;
        if z.abs() > 2.5 {
            println!("field {i:>3} {:?}: {f} flips, z = {z:+.2}", kinds[i]);
        }
    }
    let total: u64 = flips.iter().sum();
    println!("chi-square {chi2:.1} on {} fields; mean changed {:.4} (expected {:.4})", base.len(), total as f64 / trials as f64, base.len() as f64 * rate);
}
