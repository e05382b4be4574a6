#![allow(dead_code)]

pub mod golden;

use mufasa::space::{mutate, seed_genome, unimodal_seed, Genome, SeedKind, Vocabulary};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A valid genome with every field redrawn from the hybrid seed's layout,
/// followed by `extra` low-rate mutations.
pub fn random_genome(vocab: &Vocabulary, modalities: usize, seed: u64, extra: usize) -> Genome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = if modalities == 0 {
        unimodal_seed(vocab).unwrap()
    } else {
        seed_genome(SeedKind::Hybrid, modalities, vocab).unwrap()
    };
    let mut g = mutate(&base, vocab, 1.0, &mut rng);
    for _ in 0..extra {
        g = mutate(&g, vocab, 0.1, &mut rng);
    }
    g
}
