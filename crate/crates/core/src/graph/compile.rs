//! Genome to computation-graph compilation.

use crate::error::{Error, Result};
use crate::space::genome::{Arch, BranchGene, Genome, StateRef};
use crate::space::validate::validate;
use crate::space::vocab::{Activation, Combiner, Layer, Norm, Vocabulary};
use serde::{Deserialize, Serialize};
use std::fmt;

/// What a node computes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NodeOp {
    Input { modality: usize, positional: bool },
    Norm(Norm),
    Layer(Layer),
    Activation(Activation),
    /// With a single predecessor the combiner forwards it unchanged.
    Combiner(Combiner),
    /// Concatenation of every orphaned block output.
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    EmbeddingInput,
    Normalization,
    Layer,
    Activation,
    Combiner,
    Output,
}

impl NodeOp {
    pub fn kind(&self) -> NodeKind {
        match self {
            NodeOp::Input { .. } => NodeKind::EmbeddingInput,
            NodeOp::Norm(_) => NodeKind::Normalization,
            NodeOp::Layer(_) => NodeKind::Layer,
            NodeOp::Activation(_) => NodeKind::Activation,
            NodeOp::Combiner(_) => NodeKind::Combiner,
            NodeOp::Output => NodeKind::Output,
        }
    }

    pub fn label(&self) -> String {
        match self {
            NodeOp::Input { modality, positional: true } => format!("input m{modality}+pos"),
            NodeOp::Input { modality, positional: false } => format!("input m{modality}"),
            NodeOp::Norm(n) => n.to_string(),
            NodeOp::Layer(l) => l.to_string(),
            NodeOp::Activation(a) => a.to_string(),
            NodeOp::Combiner(c) => c.to_string(),
            NodeOp::Output => "output".to_string(),
        }
    }
}

/// Which architecture a node belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tag {
    Modality(usize),
    Fusion,
    Mixed,
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Modality(m) => write!(f, "m{m}"),
            Tag::Fusion => f.write_str("fusion"),
            Tag::Mixed => f.write_str("mixed"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: usize,
    pub op: NodeOp,
    /// Channel width of the node's output.
    pub width: usize,
    pub preds: Vec<usize>,
    pub tag: Tag,
}

impl NodeSpec {
    pub fn kind(&self) -> NodeKind {
        self.op.kind()
    }

    /// One-line rendering used by golden tests and debugging.
    pub fn summary(&self) -> String {
        let preds: Vec<String> = self.preds.iter().map(|p| p.to_string()).collect();
        format!("{} {} w={} <- [{}] @{}", self.id, self.op.label(), self.width, preds.join(","), self.tag)
    }
}

/// Compiled DAG. Node ids equal positions in `nodes`, and every predecessor
/// id is smaller than the node's own id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComputationGraph {
    pub nodes: Vec<NodeSpec>,
    pub outputs: Vec<usize>,
    pub parameter_count: u64,
    pub input_widths: Vec<usize>,
    pub length: usize,
}

impl ComputationGraph {
    pub fn output(&self) -> &NodeSpec {
        &self.nodes[self.outputs[0]]
    }

    pub fn output_width(&self) -> usize {
        self.output().width
    }

    pub fn num_modalities(&self) -> usize {
        self.input_widths.len()
    }

    /// Successor lists, indexed by node id.
    pub fn successors(&self) -> Vec<Vec<usize>> {
        let mut succ = vec![Vec::new(); self.nodes.len()];
        for n in &self.nodes {
            for &p in &n.preds {
                if !succ[p].contains(&n.id) {
                    succ[p].push(n.id);
                }
            }
        }
        succ
    }

    /// Width of the `i`-th predecessor of `node`.
    pub fn pred_width(&self, node: &NodeSpec, i: usize) -> usize {
        self.nodes[node.preds[i]].width
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompileOptions {
    /// Largest channel width any node may have.
    pub max_width: usize,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions { max_width: 4096 }
    }
}

/// Output width of a layer with the given input width.
///
/// Width-changing layers produce `round(multiplier * base)` channels with a
/// minimum of one, where `base` is the input width of the architecture the
/// branch belongs to. Other layers keep their input width.
pub fn layer_width(layer: Layer, in_width: usize, multiplier: f64, base: usize) -> usize {
    if layer.resizes() {
        ((multiplier * base as f64).round() as usize).max(1)
    } else {
        in_width
    }
}

/// Inner width of an attention layer: the input width rounded up to a
/// multiple of the head count.
pub fn attention_inner(in_width: usize, heads: usize) -> usize {
    in_width.div_ceil(heads) * heads
}

/// Number of distinct kernels of a lightweight convolution.
pub fn light_kernels(width: usize, reduction: usize) -> usize {
    width.div_ceil(reduction)
}

/// Trainable scalar count of a single node.
pub fn node_parameters(op: &NodeOp, in_width: usize, out_width: usize) -> u64 {
    let (i, o) = (in_width as u64, out_width as u64);
    match op {
        NodeOp::Norm(Norm::Layer) | NodeOp::Norm(Norm::Batch) => 2 * o,
        NodeOp::Layer(layer) => match *layer {
            Layer::Conv { kernel } => i * o * kernel as u64 + o,
            Layer::SepConv { kernel } => i * kernel as u64 + i * o + o,
            Layer::LightConv { kernel, reduction } => {
                (light_kernels(in_width, reduction) * kernel) as u64
            }
            Layer::Attention { heads } => {
                let d = attention_inner(in_width, heads) as u64;
                3 * (i * d + d) + d * o + o
            }
            Layer::Glu => 2 * (i * o + o),
            _ => 0,
        },
        _ => 0,
    }
}

struct Compiler<'a> {
    vocab: &'a Vocabulary,
    nodes: Vec<NodeSpec>,
    max_width: usize,
}

impl Compiler<'_> {
    fn push(&mut self, op: NodeOp, width: usize, preds: Vec<usize>, tag: Tag) -> Result<usize> {
        if width == 0 {
            return Err(Error::Internal(format!("node {} resolved to zero width", self.nodes.len())));
        }
        if width > self.max_width {
            return Err(Error::Compile(format!(
                "node {} width {width} exceeds the maximum {}",
                self.nodes.len(),
                self.max_width
            )));
        }
        if let Some(&bad) = preds.iter().find(|&&p| p >= self.nodes.len()) {
            return Err(Error::Internal(format!("cyclic reference to node {bad}")));
        }
        let id = self.nodes.len();
        self.nodes.push(NodeSpec { id, op, width, preds, tag });
        Ok(id)
    }

    fn branch(&mut self, br: &BranchGene, x: usize, base: usize, tag: Tag) -> Result<usize> {
        let norm = self.vocab.norms[br.norm];
        let layer = self.vocab.layers[br.layer];
        let act = self.vocab.activations[br.activation];
        let mult = self.vocab.relative_dims[br.dim];

        let mut cur = x;
        if norm != Norm::None {
            let w = self.nodes[cur].width;
            cur = self.push(NodeOp::Norm(norm), w, vec![cur], tag)?;
        }
        if layer != Layer::Identity {
            let w = layer_width(layer, self.nodes[cur].width, mult, base);
            cur = self.push(NodeOp::Layer(layer), w, vec![cur], tag)?;
        }
        if act != Activation::None {
            let w = self.nodes[cur].width;
            cur = self.push(NodeOp::Activation(act), w, vec![cur], tag)?;
        }
        Ok(cur)
    }
}

/// Compiles a legal genome.
///
/// Modality blocks are emitted first, then fusion blocks. Every branch
/// becomes normalization, layer and activation nodes (no-op choices emit
/// nothing), followed by one combiner node per block. Block outputs that
/// no later block reads are concatenated into the single output node.
pub fn compile(
    g: &Genome,
    vocab: &Vocabulary,
    widths: &[usize],
    length: usize,
    opts: &CompileOptions,
) -> Result<ComputationGraph> {
    let violations = validate(g, vocab);
    if !violations.is_empty() {
        let msgs: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Error::InvalidArgument(format!("invalid genome: {}", msgs.join("; "))));
    }
    if widths.len() != g.num_modalities() {
        return Err(Error::InvalidArgument(format!(
            "{} input widths for {} modalities",
            widths.len(),
            g.num_modalities()
        )));
    }
    if widths.contains(&0) || length == 0 {
        return Err(Error::InvalidArgument("widths and length must be positive".into()));
    }

    let layout = g.layout();
    let dead = vocab.layer_index(Layer::Dead);
    let is_dead = |br: &BranchGene| Some(br.layer) == dead;
    let fusion_base: usize = widths.iter().sum();

    // Embeddings that some block actually reads, emitted up front.
    let mut read = vec![false; layout.total_states()];
    for (_, b) in g.blocks() {
        if !is_dead(&b.left) {
            read[b.left.input] = true;
        }
        if !is_dead(&b.right) {
            read[b.right.input] = true;
        }
        if is_dead(&b.left) && is_dead(&b.right) {
            read[b.left.input] = true;
        }
    }

    let mut c = Compiler { vocab, nodes: Vec::new(), max_width: opts.max_width };
    let mut state_node: Vec<Option<usize>> = vec![None; layout.total_states()];
    for (idx, slot) in state_node.iter_mut().enumerate() {
        if let Some(StateRef::Embedding { modality, positional }) = layout.state(idx) {
            if read[idx] {
                let id = c.push(
                    NodeOp::Input { modality, positional },
                    widths[modality],
                    vec![],
                    Tag::Modality(modality),
                )?;
                *slot = Some(id);
            }
        }
    }

    let mut consumed = vec![false; layout.total_states()];
    for ((arch, k), block) in g.blocks() {
        let (tag, base) = match arch {
            Arch::Modality(m) => (Tag::Modality(m), widths[m]),
            Arch::Fusion => (Tag::Fusion, fusion_base),
        };
        let mut live = Vec::with_capacity(2);
        for br in [&block.left, &block.right] {
            if is_dead(br) {
                continue;
            }
            let x = state_node[br.input]
                .ok_or_else(|| Error::Internal(format!("state {} used before definition", br.input)))?;
            consumed[br.input] = true;
            live.push(c.branch(br, x, base, tag)?);
        }
        let combiner = vocab.combiners[block.combiner];
        let out = match live.len() {
            0 => {
                consumed[block.left.input] = true;
                let x = state_node[block.left.input]
                    .ok_or_else(|| Error::Internal("dead block input undefined".into()))?;
                let w = c.nodes[x].width;
                c.push(NodeOp::Combiner(combiner), w, vec![x], tag)?
            }
            1 => {
                let w = c.nodes[live[0]].width;
                c.push(NodeOp::Combiner(combiner), w, live, tag)?
            }
            _ => {
                let (a, b) = (c.nodes[live[0]].width, c.nodes[live[1]].width);
                let w = match combiner {
                    Combiner::Concat => a + b,
                    Combiner::Add | Combiner::Mul => a.max(b),
                };
                c.push(NodeOp::Combiner(combiner), w, live, tag)?
            }
        };
        let state = match arch {
            Arch::Modality(m) => StateRef::ModalityBlock { modality: m, block: k },
            Arch::Fusion => StateRef::FusionBlock(k),
        };
        state_node[layout.index(state)] = Some(out);
    }

    let orphans: Vec<usize> = (0..layout.total_states())
        .filter(|&i| !matches!(layout.state(i), Some(StateRef::Embedding { .. })))
        .filter(|&i| !consumed[i])
        .filter_map(|i| state_node[i])
        .collect();
    if orphans.is_empty() {
        return Err(Error::Compile("genome has no block outputs to form the model output".into()));
    }
    let width = orphans.iter().map(|&o| c.nodes[o].width).sum();
    let out = c.push(NodeOp::Output, width, orphans, Tag::Mixed)?;

    let mut nodes = c.nodes;
    let parameter_count = nodes
        .iter()
        .map(|n| {
            let in_w = n.preds.first().map(|&p| nodes[p].width).unwrap_or(n.width);
            node_parameters(&n.op, in_w, n.width)
        })
        .sum();
    nodes.shrink_to_fit();
    Ok(ComputationGraph { nodes, outputs: vec![out], parameter_count, input_widths: widths.to_vec(), length })
}
