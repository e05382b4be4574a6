//! Structured graph file: node list plus edge list, as JSON.
//!
//! ```text
//! {
//!   "format": "mufasa-graph",
//!   "version": 1,
//!   "input_widths": [..], "length": .., "parameter_count": ..,
//!   "nodes": [{"id", "kind", "label", "width", "preds", "tag", "parameters"}],
//!   "edges": [[from, to], ..],
//!   "outputs": [..]
//! }
//! ```

use crate::graph::compile::{node_parameters, ComputationGraph, NodeKind};
use serde::Serialize;

pub const GRAPH_FORMAT_VERSION: u32 = 1;

#[derive(Serialize)]
struct GraphFile<'a> {
    format: &'static str,
    version: u32,
    input_widths: &'a [usize],
    length: usize,
    parameter_count: u64,
    nodes: Vec<NodeRecord>,
    edges: Vec<[usize; 2]>,
    outputs: &'a [usize],
}

#[derive(Serialize)]
struct NodeRecord {
    id: usize,
    kind: NodeKind,
    label: String,
    width: usize,
    preds: Vec<usize>,
    tag: String,
    parameters: u64,
}

pub fn to_graph_json(graph: &ComputationGraph) -> String {
    let nodes = graph
        .nodes
        .iter()
        .map(|n| {
            let in_w = n.preds.first().map(|&p| graph.nodes[p].width).unwrap_or(n.width);
            NodeRecord {
                id: n.id,
                kind: n.kind(),
                label: n.op.label(),
                width: n.width,
                preds: n.preds.clone(),
                tag: n.tag.to_string(),
                parameters: node_parameters(&n.op, in_w, n.width),
            }
        })
        .collect();
    let edges = graph.nodes.iter().flat_map(|n| n.preds.iter().map(move |&p| [p, n.id])).collect();
    let file = GraphFile {
        format: "mufasa-graph",
        version: GRAPH_FORMAT_VERSION,
        input_widths: &graph.input_widths,
        length: graph.length,
        parameter_count: graph.parameter_count,
        nodes,
        edges,
        outputs: &graph.outputs,
    };
    let mut s = serde_json::to_string_pretty(&file).expect("graph serializes");
    s.push('\n');
    s
}
