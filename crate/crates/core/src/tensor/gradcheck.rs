//! Central finite-difference verification of analytic gradients.
//!
//! Inputs are drawn as a shuffled grid of distinct values bounded away from
//! zero, so no element sits on a kink of relu or at a tie inside a max pool
//! window. The loss is `sum(r * y)` for a random fixed `r`.

use crate::error::Result;
use crate::graph::compile::{layer_width, node_parameters, ComputationGraph, NodeOp, NodeSpec, Tag};
use crate::space::vocab::{Activation, Combiner, Layer, Norm, Vocabulary};
use crate::tensor::array::Tensor;
use crate::tensor::exec::{forward, init_graph_params, Mode};
use crate::tensor::params::ParameterStore;
use crate::tensor::tape::{Tape, Var};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Finite-difference step.
pub const STEP: f64 = 1e-5;

/// Denominator floor of the relative error. Gradients that are exactly
/// zero (the key bias of attention, for one) measure as roundoff of order
/// `1e-10` under central differences, so a floor is required; with this
/// one any absolute error above `1e-8` still fails.
pub const REL_FLOOR: f64 = 1e-4;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Distinct values in `(-1, 1)`, at least `1/n` away from zero and from
/// each other, in random order.
pub fn spread_values(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|k| (2.0 * k as f64 + 1.0) / n as f64 - 1.0).collect();
    v.shuffle(rng);
    v
}

fn normal_values(n: usize, std: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let d = Normal::new(0.0, std).expect("valid std");
    (0..n).map(|_| d.sample(rng)).collect()
}

/// Checks every leaf of a tape-level function. Returns the largest
/// relative error over all leaf elements.
pub fn check_fn(
    leaves: &[Tensor<f64>],
    seed: u64,
    f: impl Fn(&mut Tape<f64>, &[Var]) -> Result<Var>,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let eval = |leaves: &[Tensor<f64>], r: Option<&[f64]>| -> Result<(Tape<f64>, Vec<Var>, Var, f64)> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = leaves.iter().map(|l| tape.leaf(l.clone())).collect();
        let y = f(&mut tape, &vars)?;
        let loss = r.map(|r| tape.value(y).data().iter().zip(r).map(|(a, b)| a * b).sum()).unwrap_or(0.0);
        Ok((tape, vars, y, loss))
    };
    let out_len = {
        let (tape, _, y, _) = eval(leaves, None)?;
        tape.value(y).len()
    };
    let r = normal_values(out_len, 1.0, &mut rng);
    let (tape, vars, y, _) = eval(leaves, Some(&r))?;
    let grads = tape.backward_with(y, r.clone())?;

    let mut worst: f64 = 0.0;
    let mut work = leaves.to_vec();
    for (li, var) in vars.iter().enumerate() {
        let analytic = grads.wrt(*var).map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; leaves[li].len()]);
        for e in 0..leaves[li].len() {
            let orig = work[li].data()[e];
            work[li].data_mut()[e] = orig + STEP;
            let up = eval(&work, Some(&r))?.3;
            work[li].data_mut()[e] = orig - STEP;
            let down = eval(&work, Some(&r))?.3;
            work[li].data_mut()[e] = orig;
            let n = (up - down) / (2.0 * STEP);
            worst = worst.max(relative_error(analytic[e], n));
        }
    }
    Ok(worst)
}

/// Checks the gradients of a compiled graph with respect to its inputs and
/// every trainable parameter. Parameters are redrawn with std 0.5 so that
/// normalized kernels and attention weights are far from uniform.
pub fn check_graph(graph: &ComputationGraph, batch: usize, seed: u64, mode: Mode) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store: ParameterStore<f64> = init_graph_params(graph, seed)?;
    for id in 0..store.len() {
        let n = store.value(id).len();
        let v = normal_values(n, 0.5, &mut rng);
        store.value_mut(id).data_mut().copy_from_slice(&v);
    }
    for node in &graph.nodes {
        if let Some(buf) = store.buffer(&format!("n{}.running_var", node.id)).map(<[f64]>::len) {
            let var: Vec<f64> = (0..buf).map(|k| 0.5 + (k % 3) as f64 * 0.4).collect();
            let mean = normal_values(buf, 0.3, &mut rng);
            store.set_buffer(&format!("n{}.running_var", node.id), var);
            store.set_buffer(&format!("n{}.running_mean", node.id), mean);
        }
    }
    let inputs: Vec<Tensor<f64>> = graph
        .input_widths
        .iter()
        .map(|&w| {
            let shape = [batch, graph.length, w];
            Tensor::new(shape, spread_values(shape.iter().product(), &mut rng))
        })
        .collect::<Result<_>>()?;

    let run = |store: &mut ParameterStore<f64>, inputs: &[Tensor<f64>]| -> Result<(Tape<f64>, Vec<Var>, crate::tensor::exec::Forward)> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = inputs.iter().map(|x| tape.leaf(x.clone())).collect();
        let fwd = forward(graph, store, &mut tape, &vars, mode)?;
        Ok((tape, vars, fwd))
    };
    let (tape, vars, fwd) = run(&mut store, &inputs)?;
    let r = normal_values(tape.value(fwd.output).len(), 1.0, &mut rng);
    let grads = tape.backward_with(fwd.output, r.clone())?;
    store.zero_grad();
    fwd.accumulate(&grads, &mut store);

    let loss = |store: &mut ParameterStore<f64>, inputs: &[Tensor<f64>]| -> Result<f64> {
        let (tape, _, fwd) = run(store, inputs)?;
        Ok(tape.value(fwd.output).data().iter().zip(&r).map(|(a, b)| a * b).sum())
    };

    let mut worst: f64 = 0.0;
    let mut work = inputs.clone();
    for (m, var) in vars.iter().enumerate() {
        let analytic = grads.wrt(*var).map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; inputs[m].len()]);
        for e in 0..inputs[m].len() {
            let orig = work[m].data()[e];
            work[m].data_mut()[e] = orig + STEP;
            let up = loss(&mut store, &work)?;
            work[m].data_mut()[e] = orig - STEP;
            let down = loss(&mut store, &work)?;
            work[m].data_mut()[e] = orig;
            let n = (up - down) / (2.0 * STEP);
            worst = worst.max(relative_error(analytic[e], n));
        }
    }
    for id in 0..store.len() {
        let analytic = store.grad(id).to_vec();
        for (e, &a) in analytic.iter().enumerate() {
            let orig = store.value(id).data()[e];
            store.value_mut(id).data_mut()[e] = orig + STEP;
            let up = loss(&mut store, &inputs)?;
            store.value_mut(id).data_mut()[e] = orig - STEP;
            let down = loss(&mut store, &inputs)?;
            store.value_mut(id).data_mut()[e] = orig;
            let n = (up - down) / (2.0 * STEP);
            worst = worst.max(relative_error(a, n));
        }
    }
    Ok(worst)
}

fn finish(nodes: Vec<NodeSpec>, input_widths: Vec<usize>, length: usize) -> ComputationGraph {
    let parameter_count = nodes
        .iter()
        .map(|n| {
            let i = n.preds.first().map(|&p| nodes[p].width).unwrap_or(n.width);
            node_parameters(&n.op, i, n.width)
        })
        .sum();
    let out = nodes.len() - 1;
    ComputationGraph { nodes, outputs: vec![out], parameter_count, input_widths, length }
}

/// Graph `input -> op -> output` for a single-input node op. Width-changing
/// layers use `multiplier` on the input width.
pub fn unary_graph(op: NodeOp, width: usize, length: usize, multiplier: f64) -> ComputationGraph {
    let w = match op {
        NodeOp::Layer(l) => layer_width(l, width, multiplier, width),
        _ => width,
    };
    let tag = Tag::Modality(0);
    let nodes = vec![
        NodeSpec { id: 0, op: NodeOp::Input { modality: 0, positional: false }, width, preds: vec![], tag },
        NodeSpec { id: 1, op, width: w, preds: vec![0], tag },
        NodeSpec { id: 2, op: NodeOp::Output, width: w, preds: vec![1], tag: Tag::Mixed },
    ];
    finish(nodes, vec![width], length)
}

/// Graph combining two inputs of different widths.
pub fn combiner_graph(c: Combiner, widths: [usize; 2], length: usize) -> ComputationGraph {
    let w = match c {
        Combiner::Concat => widths[0] + widths[1],
        Combiner::Add | Combiner::Mul => widths[0].max(widths[1]),
    };
    let nodes = vec![
        NodeSpec { id: 0, op: NodeOp::Input { modality: 0, positional: true }, width: widths[0], preds: vec![], tag: Tag::Modality(0) },
        NodeSpec { id: 1, op: NodeOp::Input { modality: 1, positional: false }, width: widths[1], preds: vec![], tag: Tag::Modality(1) },
        NodeSpec { id: 2, op: NodeOp::Combiner(c), width: w, preds: vec![0, 1], tag: Tag::Fusion },
        NodeSpec { id: 3, op: NodeOp::Output, width: w, preds: vec![2], tag: Tag::Mixed },
    ];
    finish(nodes, widths.to_vec(), length)
}

/// Graph with no op between input and output.
pub fn identity_graph(width: usize, length: usize) -> ComputationGraph {
    let tag = Tag::Modality(0);
    let nodes = vec![
        NodeSpec { id: 0, op: NodeOp::Input { modality: 0, positional: false }, width, preds: vec![], tag },
        NodeSpec { id: 1, op: NodeOp::Output, width, preds: vec![0], tag: Tag::Mixed },
    ];
    finish(nodes, vec![width], length)
}

/// Gradient checks of every vocabulary entry at input shape
/// `(batch, length, width)`. Returns `(name, max relative error)` pairs.
///
/// Identity is checked as a direct input-to-output graph. Dead branches
/// compile to nothing, so no computation exists to check for them.
pub fn vocabulary_checks(vocab: &Vocabulary, shape: [usize; 3], seed: u64) -> Result<Vec<(String, f64)>> {
    let [batch, length, width] = shape;
    let mut out = Vec::new();
    for &layer in &vocab.layers {
        match layer {
            Layer::Dead => continue,
            Layer::Identity => {
                out.push((layer.to_string(), check_graph(&identity_graph(width, length), batch, seed, Mode::Train)?));
            }
            _ => {
                for mult in [0.5, 2.0] {
                    let g = unary_graph(NodeOp::Layer(layer), width, length, mult);
                    let name = if layer.resizes() { format!("{layer} x{mult}") } else { layer.to_string() };
                    out.push((name, check_graph(&g, batch, seed, Mode::Train)?));
                    if !layer.resizes() {
                        break;
                    }
                }
            }
        }
    }
    for &norm in &vocab.norms {
        if norm == Norm::None {
            continue;
        }
        let g = unary_graph(NodeOp::Norm(norm), width, length, 1.0);
        out.push((format!("{norm} train"), check_graph(&g, batch, seed, Mode::Train)?));
        out.push((format!("{norm} eval"), check_graph(&g, batch, seed, Mode::Eval)?));
    }
    for &act in &vocab.activations {
        if act == Activation::None {
            continue;
        }
        let g = unary_graph(NodeOp::Activation(act), width, length, 1.0);
        out.push((act.to_string(), check_graph(&g, batch, seed, Mode::Train)?));
    }
    for &c in &vocab.combiners {
        let g = combiner_graph(c, [width, width.saturating_sub(2).max(1)], length);
        out.push((format!("{c} (padded, positional)"), check_graph(&g, batch, seed, Mode::Train)?));
    }
    Ok(out)
}

/// Gradient checks of the ops used by the classifier head.
pub fn head_checks(shape: [usize; 3], seed: u64) -> Result<Vec<(String, f64)>> {
    let [batch, length, width] = shape;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let x = Tensor::new(shape, spread_values(batch * length * width, &mut rng))?;
    out.push(("mean over time".to_string(), check_fn(std::slice::from_ref(&x), seed, |t, v| t.mean_time(v[0]))?));

    let vocab_size = 7;
    let table = Tensor::new([1, vocab_size, width], normal_values(vocab_size * width, 1.0, &mut rng))?;
    let bags: Vec<Vec<usize>> = (0..batch * length)
        .map(|r| (0..r % 4).map(|k| (r * 3 + k * 5) % vocab_size).collect())
        .collect();
    out.push((
        "embedding bag".to_string(),
        check_fn(&[table], seed, |t, v| t.embedding_bag(v[0], &bags, batch, length))?,
    ));

    let classes = width.max(2);
    let logits = Tensor::new([batch, 1, classes], normal_values(batch * classes, 1.0, &mut rng))?;
    let labels: Vec<usize> = (0..batch).map(|b| (b * 5 + 1) % classes).collect();
    out.push((
        "softmax cross-entropy".to_string(),
        check_fn(&[logits], seed, |t, v| t.softmax_cross_entropy(v[0], &labels))?,
    ));
    let y = Tensor::new(shape, spread_values(batch * length * width, &mut rng))?;
    out.push(("fan-out product".to_string(), check_fn(&[x, y], seed, |t, v| {
        let p = t.mul(v[0], v[1])?;
        let q = t.add(p, v[0])?;
        t.swish(q)
    })?));
    Ok(out)
}
