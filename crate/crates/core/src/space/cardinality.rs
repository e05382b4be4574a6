//! Exact size of a search space.

use crate::space::genome::Layout;
use crate::space::vocab::Vocabulary;
use num_bigint::BigUint;
use num_traits::One;

/// Per-position legal input counts for each branch of each block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSlots {
    pub legal_inputs: Vec<usize>,
}

impl BlockSlots {
    pub fn from_layout(layout: &Layout) -> Self {
        BlockSlots {
            legal_inputs: layout.positions().map(|(a, k)| layout.legal_inputs(a, k).len()).collect(),
        }
    }
}

/// Exact number of distinct genomes: the product over blocks of
/// `combiners * (inputs * norms * layers * dims * activations)^2`.
pub fn cardinality(slots: &BlockSlots, v: &Vocabulary) -> BigUint {
    let branch_rest =
        (v.norms.len() * v.layers.len() * v.relative_dims.len() * v.activations.len()) as u64;
    let mut total = BigUint::one();
    for &inputs in &slots.legal_inputs {
        let branch = BigUint::from(inputs as u64 * branch_rest);
        total = total * v.combiners.len() as u64 * &branch * &branch;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_block_two_inputs() {
        let v = Vocabulary::default();
        let slots = BlockSlots { legal_inputs: vec![2] };
        // per branch: 2 inputs * 3 norms * 29 layers * 4 dims * 4 activations
        let branch: u128 = 2 * 3 * 29 * 4 * 4;
        assert_eq!(branch, 2784);
        assert_eq!(cardinality(&slots, &v), BigUint::from(3 * branch * branch));
        assert_eq!(cardinality(&slots, &v).to_string(), "23251968");
    }

    #[test]
    fn empty_layout_is_one() {
        let v = Vocabulary::default();
        assert_eq!(cardinality(&BlockSlots { legal_inputs: vec![] }, &v).to_string(), "1");
    }
}
