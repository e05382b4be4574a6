//! Writes DOT diagrams of the three seed graphs.
//!
//! `cargo run --example export_dot -- [directory]`, then
//! `dot -Tsvg hybrid.dot -o hybrid.svg`.

use mufasa::graph::{compile, to_dot, CompileOptions};
use mufasa::space::{seed_genome, SeedKind, Vocabulary};
use std::path::PathBuf;

fn main() -> mufasa::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "seed-diagrams".into()));
    std::fs::create_dir_all(&dir)?;
    let v = Vocabulary::default();
    for kind in SeedKind::ALL {
        let graph = compile(&seed_genome(kind, 3, &v)?, &v, &[8, 4, 8], 6, &CompileOptions::default())?;
        let path = dir.join(format!("{kind}.dot"));
        std::fs::write(&path, to_dot(&graph))?;
        println!("{}: {} nodes, {} parameters", path.display(), graph.nodes.len(), graph.parameter_count);
    }
    Ok(())
}
