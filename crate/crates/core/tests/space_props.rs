mod common;

use common::random_genome;
use mufasa::space::{mutate, seed_genome, validate, Arch, Genome, SeedKind, StateRef, Vocabulary};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

fn vocab() -> Vocabulary {
    Vocabulary::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn text_format_round_trips(seed in any::<u64>(), m in 0usize..4) {
        let v = vocab();
        let g = random_genome(&v, m, seed, 2);
        let text = g.to_text(&v);
        let (back, dims) = Genome::from_text(&text).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(dims, v.relative_dims.clone());
        prop_assert_eq!(back.to_text(&v), text);
    }

    #[test]
    fn encoding_round_trips(seed in any::<u64>(), m in 0usize..4) {
        let v = vocab();
        let g = random_genome(&v, m, seed, 1);
        let fields = g.encode();
        prop_assert_eq!(fields.len(), 11 * g.layout().total_blocks());
        let back = Genome::decode(&g.layout(), &fields, g.meta.clone()).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn mutation_keeps_genomes_valid(seed in any::<u64>(), rate in 0.0f64..1.0, m in 0usize..4) {
        let v = vocab();
        let g = random_genome(&v, m, seed, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let child = mutate(&g, &v, rate, &mut rng);
        prop_assert!(validate(&child, &v).is_empty());
        prop_assert_eq!(child.layout(), g.layout());
    }

    #[test]
    fn zero_rate_is_identity(seed in any::<u64>()) {
        let v = vocab();
        let g = random_genome(&v, 3, seed, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        prop_assert_eq!(mutate(&g, &v, 0.0, &mut rng).encode(), g.encode());
    }

    #[test]
    fn modality_closure_stays_in_modality(seed in any::<u64>()) {
        let v = vocab();
        let g = random_genome(&v, 3, seed, 3);
        let layout = g.layout();
        let blocks: Vec<_> = g.blocks().collect();
        let block_index = |state: usize| -> Option<usize> {
            match layout.state(state)? {
                StateRef::ModalityBlock { modality, block } => Some(layout.modality_blocks[..modality].iter().sum::<usize>() + block),
                StateRef::FusionBlock(k) => Some(layout.modality_blocks.iter().sum::<usize>() + k),
                StateRef::Embedding { .. } => None,
            }
        };
        for (i, ((arch, _), _)) in blocks.iter().enumerate() {
            let Arch::Modality(m) = *arch else { continue };
            let mut seen = BTreeSet::new();
            let mut stack = vec![i];
            while let Some(b) = stack.pop() {
                let gene = blocks[b].1;
                for input in [gene.left.input, gene.right.input] {
                    let state = layout.state(input).unwrap();
                    let owner = match state {
                        StateRef::Embedding { modality, .. } | StateRef::ModalityBlock { modality, .. } => Some(modality),
                        StateRef::FusionBlock(_) => None,
                    };
                    prop_assert_eq!(owner, Some(m));
                    if let Some(j) = block_index(input) {
                        if seen.insert(j) {
                            stack.push(j);
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn default_layout_has_154_fields() {
    let v = vocab();
    let g = seed_genome(SeedKind::Hybrid, 3, &v).unwrap();
    assert_eq!(g.encode().len(), 154);
    assert_eq!(g.field_kinds().len(), 154);
}

#[test]
fn vocabulary_has_29_distinct_layers() {
    let v = vocab();
    assert_eq!(v.layers.len(), 29);
    let names: BTreeSet<String> = v.layers.iter().map(|l| l.to_string()).collect();
    assert_eq!(names.len(), 29);
    assert!(v.check().is_ok());
}

#[test]
fn malformed_genome_text_is_rejected() {
    assert!(Genome::from_text("{").is_err());
    assert!(Genome::from_text("{\"format\": \"something-else\"}").is_err());
}
