//! Structural legality checks for genomes.

use crate::space::genome::{Arch, BranchGene, Genome, StateRef};
use crate::space::vocab::Vocabulary;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// One broken constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoModalities,
    OutOfRange { arch: Arch, block: usize, field: &'static str, value: usize, bound: usize },
    /// A modality block reads a state outside its own modality.
    CrossModality { modality: usize, block: usize, side: Side, input: usize },
    /// A block reads the output of itself or a later block.
    ForwardReference { arch: Arch, block: usize, side: Side, input: usize },
    /// The input index names no state at all.
    MissingState { arch: Arch, block: usize, side: Side, input: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoModalities => write!(f, "genome has no modality architectures"),
            Violation::OutOfRange { arch, block, field, value, bound } => {
                write!(f, "{arch:?} block {block}: {field} index {value} outside 0..{bound}")
            }
            Violation::CrossModality { modality, block, side, input } => write!(
                f,
                "modality {modality} block {block} {side:?} branch reads state {input} of another architecture"
            ),
            Violation::ForwardReference { arch, block, side, input } => {
                write!(f, "{arch:?} block {block} {side:?} branch reads later state {input}")
            }
            Violation::MissingState { arch, block, side, input } => {
                write!(f, "{arch:?} block {block} {side:?} branch reads nonexistent state {input}")
            }
        }
    }
}

/// Lists every violated constraint; an empty list means the genome is legal.
pub fn validate(g: &Genome, vocab: &Vocabulary) -> Vec<Violation> {
    let mut out = Vec::new();
    if g.modalities.is_empty() {
        out.push(Violation::NoModalities);
    }
    let layout = g.layout();
    for ((arch, k), block) in g.blocks() {
        if block.combiner >= vocab.combiners.len() {
            out.push(Violation::OutOfRange {
                arch,
                block: k,
                field: "combiner",
                value: block.combiner,
                bound: vocab.combiners.len(),
            });
        }
        for (side, br) in [(Side::Left, &block.left), (Side::Right, &block.right)] {
            check_ranges(arch, k, br, vocab, &mut out);
            let legal = layout.legal_inputs(arch, k);
            if legal.contains(&br.input) {
                continue;
            }
            let input = br.input;
            let v = match (arch, layout.state(input)) {
                (_, None) => Violation::MissingState { arch, block: k, side, input },
                (Arch::Modality(m), Some(StateRef::Embedding { modality, .. }))
                | (Arch::Modality(m), Some(StateRef::ModalityBlock { modality, .. }))
                    if modality == m =>
                {
                    Violation::ForwardReference { arch, block: k, side, input }
                }
                (Arch::Modality(m), Some(_)) => {
                    Violation::CrossModality { modality: m, block: k, side, input }
                }
                (Arch::Fusion, Some(_)) => Violation::ForwardReference { arch, block: k, side, input },
            };
            out.push(v);
        }
    }
    out
}

fn check_ranges(arch: Arch, block: usize, br: &BranchGene, v: &Vocabulary, out: &mut Vec<Violation>) {
    let fields = [
        ("normalization", br.norm, v.norms.len()),
        ("layer", br.layer, v.layers.len()),
        ("relative dimension", br.dim, v.relative_dims.len()),
        ("activation", br.activation, v.activations.len()),
    ];
    for (field, value, bound) in fields {
        if value >= bound {
            out.push(Violation::OutOfRange { arch, block, field, value, bound });
        }
    }
}
