//! Gene encoding, vocabulary, seeds, validation and mutation.

pub mod cardinality;
pub mod genome;
pub mod mutate;
pub mod seeds;
pub mod validate;
pub mod vocab;

pub use cardinality::{cardinality, BlockSlots};
pub use genome::{Arch, BlockGene, BranchGene, FieldKind, Genome, GenomeMeta, Layout, StateRef};
pub use mutate::mutate;
pub use seeds::{seed_genome, unimodal_seed, SeedKind, UNIMODAL_BLOCKS};
pub use validate::{validate, Side, Violation};
pub use vocab::{Activation, Combiner, Layer, Norm, Vocabulary};
