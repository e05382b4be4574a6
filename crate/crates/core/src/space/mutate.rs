//! Point mutation over the linear encoding.

use crate::space::genome::{FieldKind, Genome, GenomeMeta};
use crate::space::vocab::Vocabulary;
use rand::Rng;

/// Returns a mutated copy of `g`.
///
/// Every field independently flips with probability `rate`. A flipped field
/// takes a value drawn uniformly from its domain with the current value
/// removed, so a flip always changes the field. Input fields draw from the
/// legal input range of their block position, which keeps the result valid.
/// Exactly one uniform draw is consumed per field, plus one more per flip.
pub fn mutate<R: Rng + ?Sized>(g: &Genome, vocab: &Vocabulary, rate: f64, rng: &mut R) -> Genome {
    let rate = rate.clamp(0.0, 1.0);
    let mut fields = g.encode();
    for (value, kind) in fields.iter_mut().zip(g.field_kinds()) {
        let flip = rng.random::<f64>() < rate;
        if !flip {
            continue;
        }
        let (start, len) = match &kind {
            FieldKind::Input { legal } => (legal.start, legal.len()),
            other => (0, other.cardinality(vocab)),
        };
        if len < 2 {
            continue;
        }
        let current = *value - start;
        let mut pick = rng.random_range(0..len - 1);
        if pick >= current {
            pick += 1;
        }
        *value = start + pick;
    }
    let meta = GenomeMeta { seed: g.meta.seed.clone(), generation: g.meta.generation + 1 };
    Genome::decode(&g.layout(), &fields, meta).expect("layout unchanged")
}
