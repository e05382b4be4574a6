//! A training-free fitness landscape for exercising the search loop.
//!
//! Every block earns the mean of two indicators, read from its left branch
//! and its combiner:
//!
//! | architecture | indicator 1 | indicator 2 |
//! |---|---|---|
//! | modality `m`, `m % 3 == 0` | layer is a separable convolution | activation is swish |
//! | modality `m`, `m % 3 == 1` | layer is a max or average pool | activation is swish |
//! | modality `m`, `m % 3 == 2` | layer is attention | activation is swish |
//! | fusion | layer is attention | combiner is multiplication |
//!
//! The fitness is the mean block score, so the optimum is exactly 1.0 and
//! is reached by many genomes. The three-modality hybrid seed scores
//! `1/14`: its third modality and its first fused Transformer layer each
//! open with an attention branch, and nothing else matches.

use crate::space::{Activation, Arch, BlockGene, Combiner, Genome, Layer, Vocabulary};

/// Fitness of the best genomes.
pub const SURROGATE_OPTIMUM: f64 = 1.0;

fn modality_target(m: usize, layer: Layer) -> bool {
    match m % 3 {
        0 => matches!(layer, Layer::SepConv { .. }),
        1 => matches!(layer, Layer::MaxPool { .. } | Layer::AvgPool { .. }),
        _ => matches!(layer, Layer::Attention { .. }),
    }
}

fn block_score(arch: Arch, b: &BlockGene, vocab: &Vocabulary) -> f64 {
    let layer = vocab.layers[b.left.layer];
    let (first, second) = match arch {
        Arch::Modality(m) => (modality_target(m, layer), vocab.activations[b.left.activation] == Activation::Swish),
        Arch::Fusion => (matches!(layer, Layer::Attention { .. }), vocab.combiners[b.combiner] == Combiner::Mul),
    };
    (f64::from(u8::from(first)) + f64::from(u8::from(second))) / 2.0
}

/// Closed-form score in `[0, 1]`; 0 for a genome without blocks.
pub fn surrogate_fitness(g: &Genome, vocab: &Vocabulary) -> f64 {
    let (sum, n) = g.blocks().fold((0.0, 0usize), |(s, n), ((arch, _), b)| (s + block_score(arch, b, vocab), n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{seed_genome, SeedKind};

    #[test]
    fn hybrid_seed_baseline() {
        let v = Vocabulary::default();
        let g = seed_genome(SeedKind::Hybrid, 3, &v).unwrap();
        assert!((surrogate_fitness(&g, &v) - 1.0 / 14.0).abs() < 1e-15);
    }

    #[test]
    fn all_targets_reach_optimum() {
        let v = Vocabulary::default();
        let mut g = seed_genome(SeedKind::Hybrid, 3, &v).unwrap();
        let swish = v.activation_index(Activation::Swish).unwrap();
        let targets = [Layer::SepConv { kernel: 3 }, Layer::MaxPool { kernel: 3 }, Layer::Attention { heads: 4 }];
        for (m, blocks) in g.modalities.iter_mut().enumerate() {
            for b in blocks {
                b.left.layer = v.layer_index(targets[m]).unwrap();
                b.left.activation = swish;
            }
        }
        for b in &mut g.fusion {
            b.left.layer = v.layer_index(Layer::Attention { heads: 8 }).unwrap();
            b.combiner = v.combiner_index(Combiner::Mul).unwrap();
        }
        assert_eq!(surrogate_fitness(&g, &v), SURROGATE_OPTIMUM);
    }
}
