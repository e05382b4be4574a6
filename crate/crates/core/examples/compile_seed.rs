//! Compiles a seed genome and prints one line per node with its fusion
//! classification.
//!
//! `cargo run --example compile_seed -- [early|hybrid|late|unimodal] [w0,w1,w2] [length]`

use mufasa::graph::{classify_fusion, compile, CompileOptions};
use mufasa::space::{seed_genome, unimodal_seed, SeedKind, Vocabulary};

fn main() -> mufasa::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let kind = args.get(1).map(String::as_str).unwrap_or("hybrid");
    let widths: Vec<usize> = args
        .get(2)
        .map(|s| s.split(',').filter_map(|w| w.parse().ok()).collect())
        .unwrap_or_else(|| vec![8, 4, 8]);
    let length = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(6);
    let vocab = Vocabulary::default();
    let g = match kind {
        "unimodal" => unimodal_seed(&vocab)?,
        k => seed_genome(k.parse::<SeedKind>()?, widths.len(), &vocab)?,
    };
    let graph = compile(&g, &vocab, &widths, length, &CompileOptions::default())?;
    for node in &graph.nodes {
        println!("{}", node.summary());
    }
    println!("parameters: {}", graph.parameter_count);
    let report = classify_fusion(&graph);
    for m in 0..graph.num_modalities() {
        let kinds: Vec<String> = report.strategies(m).iter().map(|k| k.to_string()).collect();
        println!("modality {m}: {}", kinds.join(", "));
    }
    Ok(())
}
