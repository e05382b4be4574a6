//! Exact search-space sizes for the default layouts.
//!
//! `cargo run --example cardinality`

use mufasa::space::{cardinality, BlockSlots, Layout, Vocabulary};

fn scientific(n: &num_bigint::BigUint) -> String {
    let s = n.to_string();
    format!("{}.{}e{}", &s[..1], &s[1..4.min(s.len())], s.len() - 1)
}

fn main() {
    let v = Vocabulary::default();
    println!(
        "vocabulary: {} norms, {} layers, {} output dimensions, {} activations, {} combiners",
        v.norms.len(),
        v.layers.len(),
        v.relative_dims.len(),
        v.activations.len(),
        v.combiners.len()
    );
    let single = cardinality(&BlockSlots { legal_inputs: vec![2] }, &v);
    println!("one block with two legal inputs: {single}");
    for (name, layout) in [
        ("3 modalities x 3 blocks + 5 fusion blocks", Layout::new(vec![3, 3, 3], 5)),
        ("unimodal, 2 + 6 blocks", Layout::new(vec![2], 6)),
    ] {
        let slots = BlockSlots::from_layout(&layout);
        let n = cardinality(&slots, &v);
        println!("{name}: {} ({n})", scientific(&n));
        println!("  legal inputs per block: {:?}", slots.legal_inputs);
    }
}
