//! Finite-difference gradient report for every vocabulary operation and
//! the classifier head ops, at 64-bit.
//!
//! `cargo run --release --example gradcheck -- [batch] [length] [width]`

use mufasa::space::Vocabulary;
use mufasa::tensor::gradcheck::{head_checks, vocabulary_checks};

fn main() -> mufasa::Result<()> {
    let dims: Vec<usize> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let shape = match dims[..] {
        [b, l, w] => [b, l, w],
        _ => [2, 8, 12],
    };
    let mut results = vocabulary_checks(&Vocabulary::default(), shape, 0)?;
    results.extend(head_checks(shape, 0)?);
    for (name, err) in &results {
        println!("{name:<32} {err:.2e}{}", if *err < 1e-4 { "" } else { "  FAIL" });
    }
    let worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
    println!("{} checks at {shape:?}, worst relative error {worst:.2e}", results.len());
    Ok(())
}
