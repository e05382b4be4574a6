//! Runs a compiled graph on the tape.

use crate::error::{Error, Result};
use crate::graph::compile::{attention_inner, light_kernels, ComputationGraph, NodeOp};
use crate::space::vocab::{Activation, Combiner, Layer, Norm};
use crate::tensor::array::Tensor;
use crate::tensor::params::{Init, ParamSpec, ParameterStore};
use crate::tensor::scalar::Scalar;
use crate::tensor::tape::{Gradients, Tape, Var};

/// Momentum of running normalization statistics.
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Trainable arrays needed by the nodes of `graph`, named `n{id}.{role}`.
pub fn graph_param_specs(graph: &ComputationGraph) -> Vec<ParamSpec> {
    let mut specs = Vec::new();
    for node in &graph.nodes {
        let id = node.id;
        let i = node.preds.first().map(|&p| graph.nodes[p].width).unwrap_or(node.width);
        let o = node.width;
        let mut add = |role: &str, shape: [usize; 3], init: Init| {
            specs.push(ParamSpec::new(format!("n{id}.{role}"), shape, init));
        };
        match node.op {
            NodeOp::Norm(Norm::Layer) | NodeOp::Norm(Norm::Batch) => {
                add("gamma", [1, 1, o], Init::Ones);
                add("beta", [1, 1, o], Init::Zeros);
            }
            NodeOp::Layer(layer) => match layer {
                Layer::Conv { kernel } => {
                    add("w", [kernel, i, o], Init::TruncatedNormal);
                    add("b", [1, 1, o], Init::Zeros);
                }
                Layer::SepConv { kernel } => {
                    add("dw", [1, i, kernel], Init::TruncatedNormal);
                    add("pw", [1, i, o], Init::TruncatedNormal);
                    add("pb", [1, 1, o], Init::Zeros);
                }
                Layer::LightConv { kernel, reduction } => {
                    add("kernel", [1, light_kernels(i, reduction), kernel], Init::TruncatedNormal);
                }
                Layer::Attention { heads } => {
                    let d = attention_inner(i, heads);
                    for p in ["q", "k", "v"] {
                        add(&format!("w{p}"), [1, i, d], Init::TruncatedNormal);
                        add(&format!("b{p}"), [1, 1, d], Init::Zeros);
                    }
                    add("wo", [1, d, o], Init::TruncatedNormal);
                    add("bo", [1, 1, o], Init::Zeros);
                }
                Layer::Glu => {
                    add("wa", [1, i, o], Init::TruncatedNormal);
                    add("ba", [1, 1, o], Init::Zeros);
                    add("wg", [1, i, o], Init::TruncatedNormal);
                    add("bg", [1, 1, o], Init::Zeros);
                }
                _ => {}
            },
            _ => {}
        }
    }
    specs
}

/// Initializes the parameters and normalization buffers of `graph`.
pub fn init_graph_params<T: Scalar>(graph: &ComputationGraph, seed: u64) -> Result<ParameterStore<T>> {
    let mut store = ParameterStore::init(&graph_param_specs(graph), seed)?;
    for node in &graph.nodes {
        if node.op == NodeOp::Norm(Norm::Batch) {
            store.set_buffer(&format!("n{}.running_mean", node.id), vec![T::zero(); node.width]);
            store.set_buffer(&format!("n{}.running_var", node.id), vec![T::one(); node.width]);
        }
    }
    Ok(store)
}

/// Fixed sinusoidal position signal of shape `(batch, time, width)`.
pub fn positional_signal<T: Scalar>(batch: usize, time: usize, width: usize) -> Tensor<T> {
    let freq: Vec<f64> = (0..width).map(|c| 10000f64.powf(-((c / 2 * 2) as f64) / width as f64)).collect();
    let row: Vec<T> = (0..time * width)
        .map(|i| {
            let (t, c) = (i / width, i % width);
            let angle = t as f64 * freq[c];
            T::lit(if c % 2 == 0 { angle.sin() } else { angle.cos() })
        })
        .collect();
    Tensor::from_fn([batch, time, width], |_, t, c| row[t * width + c])
}

/// Bookkeeping of one forward pass.
pub struct Forward {
    pub output: Var,
    /// Store id and tape variable of every parameter read.
    pub params: Vec<(usize, Var)>,
    /// Tape variable of every graph node, indexed by node id.
    pub node_vars: Vec<Var>,
}

impl Forward {
    /// Adds the tape gradients of every bound parameter into `store`.
    pub fn accumulate<T: Scalar>(&self, grads: &Gradients<T>, store: &mut ParameterStore<T>) {
        for &(id, var) in &self.params {
            if let Some(g) = grads.wrt(var) {
                store.accumulate_grad(id, g);
            }
        }
    }
}

struct Ctx<'a, T: Scalar> {
    tape: &'a mut Tape<T>,
    store: &'a mut ParameterStore<T>,
    params: Vec<(usize, Var)>,
}

impl<T: Scalar> Ctx<'_, T> {
    fn param(&mut self, node: usize, role: &str) -> Result<Var> {
        let name = format!("n{node}.{role}");
        let id = self.store.id(&name).ok_or_else(|| Error::at_node(node, format!("missing parameter {name}")))?;
        let var = self.tape.leaf(self.store.value(id).clone());
        self.params.push((id, var));
        Ok(var)
    }

    fn dense(&mut self, node: usize, x: Var, w: &str, b: &str) -> Result<Var> {
        let (w, b) = (self.param(node, w)?, self.param(node, b)?);
        self.tape.conv(x, w, b, 1)
    }
}

/// Records the graph on `tape`. `inputs` holds one `(batch, length, width)`
/// variable per modality.
pub fn forward<T: Scalar>(
    graph: &ComputationGraph,
    store: &mut ParameterStore<T>,
    tape: &mut Tape<T>,
    inputs: &[Var],
    mode: Mode,
) -> Result<Forward> {
    if inputs.len() != graph.num_modalities() {
        return Err(Error::contract(format!(
            "{} inputs for {} modalities",
            inputs.len(),
            graph.num_modalities()
        )));
    }
    let mut ctx = Ctx { tape, store, params: Vec::new() };
    let mut vars: Vec<Var> = Vec::with_capacity(graph.nodes.len());
    for node in &graph.nodes {
        let id = node.id;
        let at = |e: Error| match e {
            Error::Contract { node: None, msg } => Error::at_node(id, msg),
            other => other,
        };
        let pred = |k: usize| vars[node.preds[k]];
        let var = match node.op {
            NodeOp::Input { modality, positional } => {
                let x = inputs[modality];
                let s = ctx.tape.value(x).shape();
                if s[1] != graph.length || s[2] != node.width {
                    return Err(Error::at_node(
                        id,
                        format!("input {modality} has shape {s:?}, expected length {} and width {}", graph.length, node.width),
                    ));
                }
                if positional {
                    let pos = ctx.tape.leaf(positional_signal(s[0], s[1], s[2]));
                    ctx.tape.add(x, pos).map_err(at)?
                } else {
                    x
                }
            }
            NodeOp::Norm(norm) => {
                let x = pred(0);
                let (g, b) = (ctx.param(id, "gamma")?, ctx.param(id, "beta")?);
                match (norm, mode) {
                    (Norm::Layer, _) => ctx.tape.layer_norm(x, g, b).map_err(at)?,
                    (Norm::Batch, Mode::Train) => {
                        let (y, stats) = ctx.tape.batch_norm_train(x, g, b).map_err(at)?;
                        update_running(ctx.store, id, &stats.mean, &stats.var, stats.rows);
                        y
                    }
                    (Norm::Batch, Mode::Eval) => {
                        let mean = running(ctx.store, id, "running_mean")?;
                        let var = running(ctx.store, id, "running_var")?;
                        ctx.tape.batch_norm_eval(x, g, b, &mean, &var).map_err(at)?
                    }
                    (Norm::None, _) => x,
                }
            }
            NodeOp::Layer(layer) => layer_forward(&mut ctx, id, layer, pred(0)).map_err(at)?,
            NodeOp::Activation(act) => {
                let x = pred(0);
                match act {
                    Activation::Relu => ctx.tape.relu(x),
                    Activation::LeakyRelu => ctx.tape.leaky_relu(x),
                    Activation::Swish => ctx.tape.swish(x),
                    Activation::None => Ok(x),
                }
                .map_err(at)?
            }
            NodeOp::Combiner(c) => {
                if node.preds.len() == 1 {
                    pred(0)
                } else {
                    let (a, b) = (pred(0), pred(1));
                    match c {
                        Combiner::Add => ctx.tape.add(a, b),
                        Combiner::Mul => ctx.tape.mul(a, b),
                        Combiner::Concat => ctx.tape.concat(&[a, b]),
                    }
                    .map_err(at)?
                }
            }
            NodeOp::Output => {
                if node.preds.len() == 1 {
                    pred(0)
                } else {
                    let parts: Vec<Var> = node.preds.iter().map(|&p| vars[p]).collect();
                    ctx.tape.concat(&parts).map_err(at)?
                }
            }
        };
        if ctx.tape.value(var).width() != node.width {
            return Err(Error::at_node(
                id,
                format!("produced width {}, graph expects {}", ctx.tape.value(var).width(), node.width),
            ));
        }
        vars.push(var);
    }
    let output = vars[graph.outputs[0]];
    Ok(Forward { output, params: ctx.params, node_vars: vars })
}

fn layer_forward<T: Scalar>(ctx: &mut Ctx<'_, T>, id: usize, layer: Layer, x: Var) -> Result<Var> {
    match layer {
        Layer::Conv { kernel } => {
            let (w, b) = (ctx.param(id, "w")?, ctx.param(id, "b")?);
            ctx.tape.conv(x, w, b, kernel)
        }
        Layer::SepConv { .. } => {
            let dw = ctx.param(id, "dw")?;
            let h = ctx.tape.depthwise(x, dw, 1)?;
            ctx.dense(id, h, "pw", "pb")
        }
        Layer::LightConv { reduction, .. } => {
            let raw = ctx.param(id, "kernel")?;
            let k = ctx.tape.softmax_channels(raw)?;
            ctx.tape.depthwise(x, k, reduction)
        }
        Layer::Attention { heads } => {
            let q = ctx.dense(id, x, "wq", "bq")?;
            let k = ctx.dense(id, x, "wk", "bk")?;
            let v = ctx.dense(id, x, "wv", "bv")?;
            let a = ctx.tape.attention(q, k, v, heads)?;
            ctx.dense(id, a, "wo", "bo")
        }
        Layer::Glu => {
            let a = ctx.dense(id, x, "wa", "ba")?;
            let g = ctx.dense(id, x, "wg", "bg")?;
            let s = ctx.tape.sigmoid(g)?;
            ctx.tape.mul(a, s)
        }
        Layer::MaxPool { kernel } => ctx.tape.max_pool(x, kernel),
        Layer::AvgPool { kernel } => ctx.tape.avg_pool(x, kernel),
        Layer::Identity | Layer::Dead => Ok(x),
    }
}

fn running<T: Scalar>(store: &ParameterStore<T>, id: usize, which: &str) -> Result<Vec<T>> {
    let name = format!("n{id}.{which}");
    store.buffer(&name).map(<[T]>::to_vec).ok_or_else(|| Error::at_node(id, format!("missing buffer {name}")))
}

fn update_running<T: Scalar>(store: &mut ParameterStore<T>, id: usize, mean: &[T], var: &[T], rows: usize) {
    let m = T::lit(BN_MOMENTUM);
    let unbias = if rows > 1 { T::lit(rows as f64 / (rows - 1) as f64) } else { T::one() };
    for (which, batch) in [("running_mean", mean.to_vec()), ("running_var", var.iter().map(|&v| v * unbias).collect())] {
        let name = format!("n{id}.{which}");
        let old = store.buffer(&name).map(<[T]>::to_vec).unwrap_or_else(|| batch.clone());
        let new = old.iter().zip(&batch).map(|(&o, &b)| (T::one() - m) * o + m * b).collect();
        store.set_buffer(&name, new);
    }
}
