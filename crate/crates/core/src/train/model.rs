//! Embedding front end and classifier head around a compiled graph.
//!
//! Modality order is fixed: 0 categorical codes, 1 continuous values,
//! 2 note tokens. Codes and tokens are embedded as bag means of a lookup
//! table, continuous values by a per-time linear projection. The head
//! averages the graph output over time, appends the context vector and
//! applies a linear layer to the class logits.

use crate::data::{Example, CONTEXT_DIM};
use crate::error::{Error, Result};
use crate::graph::compile::ComputationGraph;
use crate::tensor::{forward, init_graph_params, Init, Mode, ParamSpec, ParameterStore, Scalar, Tape, Tensor, Var};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

pub const MODALITIES: usize = 3;
pub const MODALITY_NAMES: [&str; MODALITIES] = ["categorical", "continuous", "notes"];

/// How modality embeddings reach the graph inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Routing {
    /// One graph input per modality.
    PerModality,
    /// A single graph input holding the concatenation of all embeddings.
    Concatenated,
    /// Every graph input receives the concatenation of all embeddings.
    ForcedEarly,
}

impl FromStr for Routing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-modality" => Ok(Routing::PerModality),
            "concatenated" => Ok(Routing::Concatenated),
            "forced-early" => Ok(Routing::ForcedEarly),
            other => Err(Error::InvalidArgument(format!("unknown routing {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Embedding width per modality.
    pub widths: [usize; MODALITIES],
    pub routing: Routing,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { widths: [8, 4, 8], routing: Routing::PerModality }
    }
}

impl ModelConfig {
    /// Number of modalities the searched genome must declare.
    pub fn graph_modalities(&self) -> usize {
        match self.routing {
            Routing::Concatenated => 1,
            Routing::PerModality | Routing::ForcedEarly => MODALITIES,
        }
    }

    /// Input widths of the searched graph.
    pub fn graph_widths(&self) -> Vec<usize> {
        let total = self.widths.iter().sum();
        match self.routing {
            Routing::PerModality => self.widths.to_vec(),
            Routing::Concatenated => vec![total],
            Routing::ForcedEarly => vec![total; MODALITIES],
        }
    }
}

/// Dimensions of the data the model reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DataShape {
    pub cat_vocab: usize,
    pub notes_vocab: usize,
    pub features: usize,
    pub classes: usize,
}

impl DataShape {
    pub fn of(spec: &crate::data::DatasetSpec) -> Self {
        DataShape {
            cat_vocab: spec.cat_vocab,
            notes_vocab: spec.notes_vocab,
            features: spec.continuous_features,
            classes: spec.num_classes,
        }
    }
}

/// Parameters outside the searched graph.
pub fn wrapper_param_specs(cfg: &ModelConfig, shape: DataShape, graph_out: usize) -> Vec<ParamSpec> {
    let [dc, dv, dn] = cfg.widths;
    vec![
        ParamSpec::new("emb.codes", [1, shape.cat_vocab, dc], Init::Normal(1.0)),
        ParamSpec::new("emb.notes", [1, shape.notes_vocab, dn], Init::Normal(1.0)),
        ParamSpec::new("emb.values.w", [1, shape.features, dv], Init::Normal(1.0 / (shape.features as f64).sqrt())),
        ParamSpec::new("emb.values.b", [1, 1, dv], Init::Zeros),
        ParamSpec::new("head.w", [1, graph_out + CONTEXT_DIM, shape.classes], Init::TruncatedNormal),
        ParamSpec::new("head.b", [1, 1, shape.classes], Init::Zeros),
    ]
}

/// Graph parameters, normalization buffers and wrapper parameters in one
/// store. The wrapper draws from a stream offset from the graph's.
pub fn init_model<T: Scalar>(
    graph: &ComputationGraph,
    cfg: &ModelConfig,
    shape: DataShape,
    seed: u64,
) -> Result<ParameterStore<T>> {
    let mut store = init_graph_params::<T>(graph, seed)?;
    let wrapper = ParameterStore::<T>::init(&wrapper_param_specs(cfg, shape, graph.output_width()), seed ^ 0x9e37_79b9_7f4a_7c15)?;
    for id in 0..wrapper.len() {
        store.add(wrapper.name(id), wrapper.value(id).clone())?;
    }
    Ok(store)
}

/// Result of one recorded model pass.
pub struct ModelPass {
    pub logits: Var,
    pub params: Vec<(usize, Var)>,
}

fn bind<T: Scalar>(tape: &mut Tape<T>, store: &ParameterStore<T>, name: &str, params: &mut Vec<(usize, Var)>) -> Result<Var> {
    let id = store.require(name)?;
    let v = tape.leaf(store.value(id).clone());
    params.push((id, v));
    Ok(v)
}

/// Records embeddings, graph and head for `batch` on `tape`.
pub fn model_forward<T: Scalar>(
    graph: &ComputationGraph,
    cfg: &ModelConfig,
    store: &mut ParameterStore<T>,
    tape: &mut Tape<T>,
    batch: &[&Example],
    mode: Mode,
) -> Result<ModelPass> {
    let b = batch.len();
    if b == 0 {
        return Err(Error::contract("empty batch"));
    }
    let len = graph.length;
    if let Some(e) = batch.iter().find(|e| e.seq_len() != len) {
        return Err(Error::contract(format!("example {} has {} bags, graph expects {len}", e.id, e.seq_len())));
    }
    let mut params = Vec::new();
    let codes: Vec<Vec<usize>> = batch.iter().flat_map(|e| e.codes.iter().cloned()).collect();
    let notes: Vec<Vec<usize>> = batch.iter().flat_map(|e| e.notes.iter().cloned()).collect();
    let features = batch[0].values.first().map_or(0, Vec::len);
    let values: Vec<f64> = batch.iter().flat_map(|e| e.values.iter().flatten().copied()).collect();

    let table = bind(tape, store, "emb.codes", &mut params)?;
    let cat = tape.embedding_bag(table, &codes, b, len)?;
    let table = bind(tape, store, "emb.notes", &mut params)?;
    let note = tape.embedding_bag(table, &notes, b, len)?;
    let x = tape.leaf(Tensor::from_f64([b, len, features], &values)?);
    let w = bind(tape, store, "emb.values.w", &mut params)?;
    let bias = bind(tape, store, "emb.values.b", &mut params)?;
    let cont = tape.conv(x, w, bias, 1)?;

    let embedded = [cat, cont, note];
    let inputs = match cfg.routing {
        Routing::PerModality => embedded.to_vec(),
        Routing::Concatenated => vec![tape.concat(&embedded)?],
        Routing::ForcedEarly => {
            let joint = tape.concat(&embedded)?;
            vec![joint; MODALITIES]
        }
    };
    let fwd = forward(graph, store, tape, &inputs, mode)?;
    params.extend(fwd.params);

    let pooled = tape.mean_time(fwd.output)?;
    let context: Vec<f64> = batch.iter().flat_map(|e| e.context.iter().copied()).collect();
    let ctx = tape.leaf(Tensor::from_f64([b, 1, CONTEXT_DIM], &context)?);
    let h = tape.concat(&[pooled, ctx])?;
    let w = bind(tape, store, "head.w", &mut params)?;
    let bias = bind(tape, store, "head.b", &mut params)?;
    let logits = tape.conv(h, w, bias, 1)?;
    Ok(ModelPass { logits, params })
}

/// Class logits of `examples` in evaluation mode, shape `(n, 1, classes)`.
pub fn predict<T: Scalar>(
    graph: &ComputationGraph,
    cfg: &ModelConfig,
    store: &mut ParameterStore<T>,
    examples: &[Example],
    batch_size: usize,
) -> Result<Tensor<T>> {
    let mut out = Vec::new();
    let mut classes = 0;
    for chunk in examples.chunks(batch_size.max(1)) {
        let refs: Vec<&Example> = chunk.iter().collect();
        let mut tape = Tape::new();
        let pass = model_forward(graph, cfg, store, &mut tape, &refs, Mode::Eval)?;
        let logits = tape.value(pass.logits);
        classes = logits.width();
        out.extend_from_slice(logits.data());
    }
    Tensor::new([examples.len(), 1, classes], out)
}
