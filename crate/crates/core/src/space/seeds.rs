//! Transformer seed genomes for the three fusion strategies.
//!
//! One Transformer layer takes three blocks:
//!
//! 1. `x + attention(layer_norm(x))`
//! 2. `relu(conv1x1(layer_norm(.)))` widening to 4x, right branch dead
//! 3. `conv1x1(.)` back to 1x, plus the residual from block 1
//!
//! Every seed stacks exactly two such layers on each input path.

use crate::error::{Error, Result};
use crate::space::genome::{BlockGene, BranchGene, Genome, GenomeMeta, Layout, StateRef};
use crate::space::vocab::{Activation, Combiner, Layer, Norm, Vocabulary};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedKind {
    Early,
    Hybrid,
    Late,
}

impl SeedKind {
    pub const ALL: [SeedKind; 3] = [SeedKind::Early, SeedKind::Hybrid, SeedKind::Late];

    pub fn name(self) -> &'static str {
        match self {
            SeedKind::Early => "early",
            SeedKind::Hybrid => "hybrid",
            SeedKind::Late => "late",
        }
    }
}

impl fmt::Display for SeedKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SeedKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "early" => Ok(SeedKind::Early),
            "hybrid" => Ok(SeedKind::Hybrid),
            "late" => Ok(SeedKind::Late),
            other => Err(Error::InvalidArgument(format!("unknown seed kind {other:?}"))),
        }
    }
}

/// Attention heads used by the seed Transformer layers.
pub const SEED_HEADS: usize = 4;

struct Builder<'a> {
    v: &'a Vocabulary,
}

impl Builder<'_> {
    fn branch(&self, input: usize, norm: Norm, layer: Layer, dim: f64, act: Activation) -> BranchGene {
        BranchGene {
            input,
            norm: self.v.norm_index(norm).expect("norm in vocabulary"),
            layer: self.v.layer_index(layer).expect("layer in vocabulary"),
            dim: self.v.dim_index(dim).expect("seed dimensions need 1x and 4x in the vocabulary"),
            activation: self.v.activation_index(act).expect("activation in vocabulary"),
        }
    }

    fn block(&self, left: BranchGene, right: BranchGene, c: Combiner) -> BlockGene {
        BlockGene { left, right, combiner: self.v.combiner_index(c).expect("combiner in vocabulary") }
    }

    fn pass(&self, input: usize) -> BranchGene {
        self.branch(input, Norm::None, Layer::Identity, 1.0, Activation::None)
    }

    fn dead(&self, input: usize) -> BranchGene {
        self.branch(input, Norm::None, Layer::Dead, 1.0, Activation::None)
    }

    /// `first_out` is the state index the first emitted block will get.
    fn transformer_layer(&self, x: usize, first_out: usize) -> [BlockGene; 3] {
        let a = first_out;
        let b = first_out + 1;
        [
            self.block(
                self.branch(x, Norm::Layer, Layer::Attention { heads: SEED_HEADS }, 1.0, Activation::None),
                self.pass(x),
                Combiner::Add,
            ),
            self.block(
                self.branch(a, Norm::Layer, Layer::Conv { kernel: 1 }, 4.0, Activation::Relu),
                self.dead(a),
                Combiner::Add,
            ),
            self.block(
                self.branch(b, Norm::None, Layer::Conv { kernel: 1 }, 1.0, Activation::None),
                self.pass(a),
                Combiner::Add,
            ),
        ]
    }

    fn identity_block(&self, x: usize) -> BlockGene {
        self.block(self.pass(x), self.dead(x), Combiner::Add)
    }

    /// Transformer layers applied to the positional embedding of a
    /// modality whose states start at `offset`.
    fn modality_stack(&self, offset: usize, layers: usize) -> Vec<BlockGene> {
        let mut blocks = Vec::new();
        let mut x = offset;
        for _ in 0..layers {
            let first = offset + 2 + blocks.len();
            blocks.extend(self.transformer_layer(x, first));
            x = offset + 2 + blocks.len() - 1;
        }
        blocks
    }

    fn identity_stack(&self, offset: usize, n: usize) -> Vec<BlockGene> {
        (0..n).map(|k| self.identity_block(if k == 0 { offset } else { offset + 1 + k })).collect()
    }
}

/// Builds the Transformer seed for the given fusion strategy.
///
/// * early: three identity blocks per modality; the fusion architecture
///   concatenates all modality outputs and applies two Transformer layers.
/// * hybrid: one Transformer layer per modality, concatenation, then one
///   fused Transformer layer.
/// * late: two Transformer layers per modality and an empty fusion
///   architecture, so modality outputs meet only at the model output.
pub fn seed_genome(kind: SeedKind, modalities: usize, vocab: &Vocabulary) -> Result<Genome> {
    if modalities == 0 {
        return Err(Error::InvalidArgument("seed needs at least one modality".into()));
    }
    let b = Builder { v: vocab };
    let (per_modality, fused_layers) = match kind {
        SeedKind::Early => (3, 2),
        SeedKind::Hybrid => (3, 1),
        SeedKind::Late => (6, 0),
    };
    let fusion_blocks = if fused_layers > 0 { modalities - 1 + 3 * fused_layers } else { 0 };
    let layout = Layout::new(vec![per_modality; modalities], fusion_blocks);

    let modality_blocks: Vec<Vec<BlockGene>> = (0..modalities)
        .map(|m| {
            let offset = layout.modality_offset(m);
            match kind {
                SeedKind::Early => b.identity_stack(offset, per_modality),
                _ => b.modality_stack(offset, per_modality / 3),
            }
        })
        .collect();

    let mut fusion = Vec::new();
    if fused_layers > 0 {
        let last_state =
            |m: usize| layout.index(StateRef::ModalityBlock { modality: m, block: per_modality - 1 });
        let own = |k: usize| layout.index(StateRef::FusionBlock(k));

        let mut x = last_state(0);
        for m in 1..modalities {
            fusion.push(b.block(b.pass(x), b.pass(last_state(m)), Combiner::Concat));
            x = own(fusion.len() - 1);
        }
        for _ in 0..fused_layers {
            let first = own(fusion.len());
            fusion.extend(b.transformer_layer(x, first));
            x = own(fusion.len() - 1);
        }
    }

    Ok(Genome {
        modalities: modality_blocks,
        fusion,
        meta: GenomeMeta { seed: format!("transformer-{kind}"), generation: 0 },
    })
}

/// Blocks of the single-modality seed: two identity blocks and two
/// Transformer layers, the same maximum depth as the three-modality hybrid
/// seed (three modality blocks then five fusion blocks).
pub const UNIMODAL_BLOCKS: usize = 8;

/// Early-fusion Transformer seed over one input holding all modalities.
pub fn unimodal_seed(vocab: &Vocabulary) -> Result<Genome> {
    let b = Builder { v: vocab };
    let layout = Layout::new(vec![2], 6);
    let modality = b.identity_stack(layout.modality_offset(0), 2);
    let own = |k: usize| layout.index(StateRef::FusionBlock(k));
    let mut fusion = Vec::new();
    let mut x = layout.index(StateRef::ModalityBlock { modality: 0, block: 1 });
    for _ in 0..2 {
        let first = own(fusion.len());
        fusion.extend(b.transformer_layer(x, first));
        x = own(fusion.len() - 1);
    }
    Ok(Genome {
        modalities: vec![modality],
        fusion,
        meta: GenomeMeta { seed: "transformer-unimodal".into(), generation: 0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::validate::validate;

    #[test]
    fn unimodal_seed_has_8_blocks() {
        let v = Vocabulary::default();
        let g = unimodal_seed(&v).unwrap();
        assert_eq!(g.layout().total_blocks(), UNIMODAL_BLOCKS);
        assert!(validate(&g, &v).is_empty());
    }

    #[test]
    fn hybrid_three_modalities_has_14_blocks() {
        let v = Vocabulary::default();
        let g = seed_genome(SeedKind::Hybrid, 3, &v).unwrap();
        assert_eq!(g.layout(), Layout::new(vec![3, 3, 3], 5));
        assert_eq!(g.encode().len(), 154);
    }

    #[test]
    fn early_seed_is_identity_then_concat() {
        let v = Vocabulary::default();
        let g = seed_genome(SeedKind::Early, 3, &v).unwrap();
        let identity = v.layer_index(Layer::Identity).unwrap();
        let dead = v.layer_index(Layer::Dead).unwrap();
        for blocks in &g.modalities {
            for blk in blocks {
                assert_eq!(blk.left.layer, identity);
                assert_eq!(blk.right.layer, dead);
            }
        }
        assert_eq!(g.fusion[0].combiner, v.combiner_index(Combiner::Concat).unwrap());
    }

    #[test]
    fn all_seeds_validate() {
        let v = Vocabulary::default();
        for kind in SeedKind::ALL {
            for m in 1..=4 {
                let g = seed_genome(kind, m, &v).unwrap();
                assert!(validate(&g, &v).is_empty(), "{kind} x{m}");
            }
        }
    }

    #[test]
    fn bad_kind_and_zero_modalities() {
        assert!(matches!("wide".parse::<SeedKind>(), Err(Error::InvalidArgument(_))));
        assert!(seed_genome(SeedKind::Late, 0, &Vocabulary::default()).is_err());
    }
}
