//! Trains one genome with per-modality routing and again with every input
//! path fed the concatenation of all modalities.
//!
//! `cargo run --release --example forced_early -- [early|hybrid|late] [seed]`

use mufasa::data::generate;
use mufasa::presets::{desk_dataset, desk_model, desk_train};
use mufasa::space::{seed_genome, SeedKind, Vocabulary};
use mufasa::train::{evaluate_candidate, Routing};

fn main() -> mufasa::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let kind: SeedKind = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(SeedKind::Hybrid);
    let seed = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0);
    let v = Vocabulary::default();
    let g = seed_genome(kind, 3, &v)?;
    let ds = generate(&desk_dataset(1.0, seed))?;
    for routing in [Routing::PerModality, Routing::ForcedEarly] {
        let model = desk_model(routing);
        let r = evaluate_candidate(&g, &v, &ds, &model, &desk_train(seed))?;
        println!(
            "{kind} {routing:?}: input widths {:?}, {} parameters, validation recall@5 {:.4}, {:.1}s",
            model.graph_widths(),
            r.parameter_count,
            r.fitness,
            r.wall_time
        );
    }
    Ok(())
}
