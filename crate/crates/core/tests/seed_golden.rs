mod common;

use common::golden::{early, hybrid, late};
use mufasa::graph::{classify_fusion, compile, CompileOptions, FusionType};
use mufasa::space::{seed_genome, SeedKind, Vocabulary};

fn check(kind: SeedKind, expected: Vec<String>, fusion: FusionType) {
    let v = Vocabulary::default();
    let genome = seed_genome(kind, 3, &v).unwrap();
    let graph = compile(&genome, &v, &[4, 2, 4], 3, &CompileOptions::default()).unwrap();
    let got: Vec<String> = graph.nodes.iter().map(|n| n.summary()).collect();
    assert_eq!(got.len(), expected.len(), "{kind}: node count");
    for (g, e) in got.iter().zip(&expected) {
        assert_eq!(g, e, "{kind}");
    }
    let report = classify_fusion(&graph);
    for m in 0..3 {
        assert_eq!(report.strategies(m).iter().copied().collect::<Vec<_>>(), vec![fusion], "{kind} modality {m}");
    }
    assert!(report.disconnected.is_empty());
}

#[test]
fn early_seed_matches_golden() {
    check(SeedKind::Early, early(), FusionType::Early);
}

#[test]
fn hybrid_seed_matches_golden() {
    check(SeedKind::Hybrid, hybrid(), FusionType::Hybrid);
}

#[test]
fn late_seed_matches_golden() {
    check(SeedKind::Late, late(), FusionType::Late);
}

/// Weights of one Transformer layer at width `w` with four heads.
fn transformer_params(w: u64) -> u64 {
    let d = w.div_ceil(4) * 4;
    let norms = 2 * 2 * w;
    let attention = 3 * (w * d + d) + d * w + w;
    let ffn = (w * 4 * w + 4 * w) + (4 * w * w + w);
    norms + attention + ffn
}

#[test]
fn seed_parameter_counts_by_hand() {
    let v = Vocabulary::default();
    let count = |k| {
        let g = seed_genome(k, 3, &v).unwrap();
        compile(&g, &v, &[4, 2, 4], 3, &CompileOptions::default()).unwrap().parameter_count
    };
    let per_modality: u64 = [4, 2, 4].iter().map(|&w| transformer_params(w)).sum();
    assert_eq!(count(SeedKind::Early), 2 * transformer_params(10));
    assert_eq!(count(SeedKind::Hybrid), per_modality + transformer_params(10));
    assert_eq!(count(SeedKind::Late), 2 * per_modality);
}
