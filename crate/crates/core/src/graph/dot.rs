//! Graphviz rendering.
//!
//! Fill color encodes the architecture a node belongs to (one color per
//! modality, red for the fusion architecture and the output). Border color
//! encodes the function kind: yellow for normalization, red for
//! nonlinearity, blue for layers and green for combiners.

use crate::graph::compile::{ComputationGraph, NodeKind, Tag};
use std::fmt::Write;

const MODALITY_FILLS: [&str; 6] = ["#b7e4c7", "#d0bfff", "#ffe8a3", "#a8dadc", "#f4c2c2", "#d9d9d9"];
const FUSION_FILL: &str = "#ff9b9b";

pub fn fill_color(tag: Tag) -> &'static str {
    match tag {
        Tag::Modality(m) => MODALITY_FILLS[m % MODALITY_FILLS.len()],
        Tag::Fusion | Tag::Mixed => FUSION_FILL,
    }
}

pub fn border_color(kind: NodeKind) -> &'static str {
    match kind {
        NodeKind::Normalization => "#e6b800",
        NodeKind::Activation => "#d62828",
        NodeKind::Layer => "#1d4ed8",
        NodeKind::Combiner => "#2b9348",
        NodeKind::EmbeddingInput | NodeKind::Output => "#000000",
    }
}

/// Renders the graph in the dot language. Output depends only on the graph.
pub fn to_dot(graph: &ComputationGraph) -> String {
    let mut s = String::new();
    s.push_str("digraph mufasa {\n");
    s.push_str("  rankdir=BT;\n");
    s.push_str("  node [shape=box, style=\"filled,rounded\", penwidth=2, fontname=\"Helvetica\"];\n");
    for n in &graph.nodes {
        let shape = match n.kind() {
            NodeKind::EmbeddingInput | NodeKind::Output => ", shape=ellipse",
            _ => "",
        };
        writeln!(
            s,
            "  n{} [label=\"{}\\nw={}\", fillcolor=\"{}\", color=\"{}\"{}];",
            n.id,
            n.op.label(),
            n.width,
            fill_color(n.tag),
            border_color(n.kind()),
            shape
        )
        .unwrap();
    }
    for n in &graph.nodes {
        for p in &n.preds {
            writeln!(s, "  n{p} -> n{};", n.id).unwrap();
        }
    }
    s.push_str("}\n");
    s
}
