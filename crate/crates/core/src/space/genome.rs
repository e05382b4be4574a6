//! Gene encoding of a multimodal architecture.
//!
//! A genome holds one block list per modality and one block list for the
//! fusion architecture. Each block has two branches and a combiner; every
//! block linearizes to eleven integer fields.
//!
//! Branch inputs use one state numbering for the whole genome: for each
//! modality in order, its embedding with the positional signal added, its
//! bare embedding, then its block outputs; after all modalities, the fusion
//! block outputs. A modality block may read only the two embeddings and
//! earlier block outputs of its own modality. A fusion block may read any
//! modality state and the outputs of earlier fusion blocks.

use crate::error::{Error, Result};
use crate::space::vocab::{Vocabulary, VOCAB_VERSION};
use serde::{Deserialize, Serialize};
use std::ops::Range;

/// Number of embedding states each modality architecture starts from.
pub const INITIAL_STATES: usize = 2;

/// Fields per block in the linear encoding.
pub const FIELDS_PER_BLOCK: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BranchGene {
    pub input: usize,
    pub norm: usize,
    pub layer: usize,
    pub dim: usize,
    pub activation: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockGene {
    pub left: BranchGene,
    pub right: BranchGene,
    pub combiner: usize,
}

impl BlockGene {
    pub fn fields(&self) -> [usize; FIELDS_PER_BLOCK] {
        let (l, r) = (&self.left, &self.right);
        [
            l.input, l.norm, l.layer, l.dim, l.activation, r.input, r.norm, r.layer, r.dim,
            r.activation, self.combiner,
        ]
    }

    pub fn from_fields(f: &[usize]) -> Self {
        BlockGene {
            left: BranchGene { input: f[0], norm: f[1], layer: f[2], dim: f[3], activation: f[4] },
            right: BranchGene { input: f[5], norm: f[6], layer: f[7], dim: f[8], activation: f[9] },
            combiner: f[10],
        }
    }
}

/// Provenance carried along with a genome.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub struct GenomeMeta {
    pub seed: String,
    pub generation: u64,
}

/// Which architecture a block belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arch {
    Modality(usize),
    Fusion,
}

/// A hidden state reachable from some block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateRef {
    /// Embedding of a modality; `positional` selects the variant with the
    /// positional signal added.
    Embedding { modality: usize, positional: bool },
    ModalityBlock { modality: usize, block: usize },
    FusionBlock(usize),
}

/// Block counts of a genome, independent of the gene values.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Layout {
    pub modality_blocks: Vec<usize>,
    pub fusion_blocks: usize,
}

impl Layout {
    pub fn new(modality_blocks: Vec<usize>, fusion_blocks: usize) -> Self {
        Layout { modality_blocks, fusion_blocks }
    }

    pub fn modalities(&self) -> usize {
        self.modality_blocks.len()
    }

    pub fn total_blocks(&self) -> usize {
        self.modality_blocks.iter().sum::<usize>() + self.fusion_blocks
    }

    pub fn total_fields(&self) -> usize {
        FIELDS_PER_BLOCK * self.total_blocks()
    }

    /// States of modality `m` visible to fusion blocks.
    pub fn modality_states(&self, m: usize) -> usize {
        INITIAL_STATES + self.modality_blocks[m]
    }

    /// First state index belonging to modality `m`.
    pub fn modality_offset(&self, m: usize) -> usize {
        (0..m).map(|i| self.modality_states(i)).sum()
    }

    /// Number of states before the first fusion block output.
    pub fn fusion_offset(&self) -> usize {
        self.modality_offset(self.modalities())
    }

    /// Total number of addressable states.
    pub fn total_states(&self) -> usize {
        self.fusion_offset() + self.fusion_blocks
    }

    /// Legal branch-input indices at a block position.
    pub fn legal_inputs(&self, arch: Arch, block: usize) -> Range<usize> {
        match arch {
            Arch::Modality(m) => {
                let start = self.modality_offset(m);
                start..start + INITIAL_STATES + block
            }
            Arch::Fusion => 0..self.fusion_offset() + block,
        }
    }

    /// Blocks in encoding order.
    pub fn positions(&self) -> impl Iterator<Item = (Arch, usize)> + '_ {
        let modal = self
            .modality_blocks
            .iter()
            .enumerate()
            .flat_map(|(m, &n)| (0..n).map(move |k| (Arch::Modality(m), k)));
        modal.chain((0..self.fusion_blocks).map(|k| (Arch::Fusion, k)))
    }

    /// Resolves a state index.
    pub fn state(&self, index: usize) -> Option<StateRef> {
        let mut rest = index;
        for m in 0..self.modalities() {
            let n = self.modality_states(m);
            if rest < n {
                return Some(match rest {
                    0 => StateRef::Embedding { modality: m, positional: true },
                    1 => StateRef::Embedding { modality: m, positional: false },
                    k => StateRef::ModalityBlock { modality: m, block: k - INITIAL_STATES },
                });
            }
            rest -= n;
        }
        (rest < self.fusion_blocks).then_some(StateRef::FusionBlock(rest))
    }

    /// Inverse of [`Layout::state`].
    pub fn index(&self, state: StateRef) -> usize {
        match state {
            StateRef::Embedding { modality, positional } => {
                self.modality_offset(modality) + if positional { 0 } else { 1 }
            }
            StateRef::ModalityBlock { modality, block } => {
                self.modality_offset(modality) + INITIAL_STATES + block
            }
            StateRef::FusionBlock(k) => self.fusion_offset() + k,
        }
    }
}

/// Domain of one linearized field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FieldKind {
    Input { legal: Range<usize> },
    Norm,
    Layer,
    Dim,
    Activation,
    Combiner,
}

impl FieldKind {
    pub fn cardinality(&self, vocab: &Vocabulary) -> usize {
        match self {
            FieldKind::Input { legal } => legal.len(),
            FieldKind::Norm => vocab.norms.len(),
            FieldKind::Layer => vocab.layers.len(),
            FieldKind::Dim => vocab.relative_dims.len(),
            FieldKind::Activation => vocab.activations.len(),
            FieldKind::Combiner => vocab.combiners.len(),
        }
    }
}

/// The searchable unit: per-modality block lists plus a fusion block list.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Genome {
    pub modalities: Vec<Vec<BlockGene>>,
    pub fusion: Vec<BlockGene>,
    pub meta: GenomeMeta,
}

impl Genome {
    pub fn layout(&self) -> Layout {
        Layout::new(self.modalities.iter().map(Vec::len).collect(), self.fusion.len())
    }

    pub fn num_modalities(&self) -> usize {
        self.modalities.len()
    }

    pub fn blocks(&self) -> impl Iterator<Item = ((Arch, usize), &BlockGene)> + '_ {
        let modal = self
            .modalities
            .iter()
            .enumerate()
            .flat_map(|(m, bs)| bs.iter().enumerate().map(move |(k, b)| ((Arch::Modality(m), k), b)));
        modal.chain(self.fusion.iter().enumerate().map(|(k, b)| ((Arch::Fusion, k), b)))
    }

    /// Flattens the genome into its field list, modality blocks first.
    pub fn encode(&self) -> Vec<usize> {
        self.blocks().flat_map(|(_, b)| b.fields()).collect()
    }

    /// The domain of every field of [`Genome::encode`], position by position.
    pub fn field_kinds(&self) -> Vec<FieldKind> {
        field_kinds(&self.layout())
    }

    pub fn decode(layout: &Layout, fields: &[usize], meta: GenomeMeta) -> Result<Genome> {
        if fields.len() != layout.total_fields() {
            return Err(Error::InvalidArgument(format!(
                "expected {} fields, got {}",
                layout.total_fields(),
                fields.len()
            )));
        }
        let mut chunks = fields.chunks(FIELDS_PER_BLOCK).map(BlockGene::from_fields);
        let modalities = layout
            .modality_blocks
            .iter()
            .map(|&n| chunks.by_ref().take(n).collect())
            .collect();
        let fusion = chunks.collect();
        Ok(Genome { modalities, fusion, meta })
    }

    /// Number of fields that differ between two genomes of the same layout.
    pub fn hamming(&self, other: &Genome) -> usize {
        self.encode().iter().zip(other.encode()).filter(|(a, b)| **a != *b).count()
    }

    /// Serializes to the versioned JSON genome format.
    pub fn to_text(&self, vocab: &Vocabulary) -> String {
        let file = GenomeFile {
            format: GENOME_FORMAT.to_string(),
            vocab_version: VOCAB_VERSION.to_string(),
            relative_dims: vocab.relative_dims.clone(),
            seed: self.meta.seed.clone(),
            generation: self.meta.generation,
            modalities: self.modalities.clone(),
            fusion: self.fusion.clone(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("genome serializes");
        s.push('\n');
        s
    }

    /// Parses the JSON genome format. Returns the genome together with the
    /// relative dimension list recorded in the file.
    pub fn from_text(text: &str) -> Result<(Genome, Vec<f64>)> {
        let file: GenomeFile = serde_json::from_str(text)?;
        if file.format != GENOME_FORMAT {
            return Err(Error::Format(format!("unknown genome format {:?}", file.format)));
        }
        if file.vocab_version != VOCAB_VERSION {
            return Err(Error::Format(format!(
                "genome written for vocabulary {:?}, expected {VOCAB_VERSION:?}",
                file.vocab_version
            )));
        }
        let genome = Genome {
            modalities: file.modalities,
            fusion: file.fusion,
            meta: GenomeMeta { seed: file.seed, generation: file.generation },
        };
        Ok((genome, file.relative_dims))
    }
}

pub fn field_kinds(layout: &Layout) -> Vec<FieldKind> {
    let mut kinds = Vec::with_capacity(layout.total_fields());
    for (arch, k) in layout.positions() {
        let legal = layout.legal_inputs(arch, k);
        for _ in 0..2 {
            kinds.extend([
                FieldKind::Input { legal: legal.clone() },
                FieldKind::Norm,
                FieldKind::Layer,
                FieldKind::Dim,
                FieldKind::Activation,
            ]);
        }
        kinds.push(FieldKind::Combiner);
    }
    kinds
}

const GENOME_FORMAT: &str = "mufasa-genome";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenomeFile {
    format: String,
    vocab_version: String,
    relative_dims: Vec<f64>,
    seed: String,
    generation: u64,
    modalities: Vec<Vec<BlockGene>>,
    fusion: Vec<BlockGene>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_index_round_trips() {
        let layout = Layout::new(vec![3, 0, 2], 4);
        assert_eq!(layout.legal_inputs(Arch::Fusion, 0), 0..11);
        assert_eq!(layout.legal_inputs(Arch::Modality(2), 1), 7..10);
        for i in 0..layout.total_states() {
            let s = layout.state(i).unwrap();
            assert_eq!(layout.index(s), i);
        }
        assert_eq!(layout.state(15), None);
        assert_eq!(layout.state(5), Some(StateRef::Embedding { modality: 1, positional: true }));
    }

    #[test]
    fn field_count_matches_layout() {
        let layout = Layout::new(vec![3, 3, 3], 5);
        assert_eq!(field_kinds(&layout).len(), 154);
        assert_eq!(layout.total_fields(), 154);
    }
}
