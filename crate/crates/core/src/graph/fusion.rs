//! Per-modality fusion strategy classification.
//!
//! A modality enters the rest of the model wherever one of its nodes feeds
//! a fusion node or the output node. Each entry is classified by two facts:
//! whether the entering state already depends on a weighted layer of the
//! modality, and whether any weighted layer lies between the entry point
//! and the model output.
//!
//! * early: the state enters untransformed.
//! * hybrid: a transformed state enters and is processed further.
//! * late: the state reaches the output with no weighted layer after entry.

use crate::graph::compile::{ComputationGraph, NodeOp, Tag};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionType {
    Early,
    Hybrid,
    Late,
}

impl fmt::Display for FusionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FusionType::Early => "early",
            FusionType::Hybrid => "hybrid",
            FusionType::Late => "late",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionReport {
    pub per_modality: Vec<BTreeSet<FusionType>>,
    /// Modalities with no path to the output.
    pub disconnected: Vec<usize>,
}

impl FusionReport {
    pub fn strategies(&self, modality: usize) -> &BTreeSet<FusionType> {
        &self.per_modality[modality]
    }
}

fn weighted(op: &NodeOp) -> bool {
    matches!(op, NodeOp::Layer(l) if l.has_weights())
}

pub fn classify_fusion(graph: &ComputationGraph) -> FusionReport {
    let n = graph.nodes.len();
    let succ = graph.successors();

    let mut downstream = vec![false; n];
    for id in (0..n).rev() {
        downstream[id] = weighted(&graph.nodes[id].op) || succ[id].iter().any(|&s| downstream[s]);
    }

    let mut per_modality = Vec::with_capacity(graph.num_modalities());
    let mut disconnected = Vec::new();
    for m in 0..graph.num_modalities() {
        let own = |id: usize| graph.nodes[id].tag == Tag::Modality(m);
        let mut transformed = vec![false; n];
        for node in graph.nodes.iter().filter(|x| own(x.id)) {
            transformed[node.id] = weighted(&node.op) || node.preds.iter().any(|&p| transformed[p]);
        }

        let mut set = BTreeSet::new();
        for node in graph.nodes.iter().filter(|x| !own(x.id)) {
            for &p in node.preds.iter().filter(|&&p| own(p)) {
                if !transformed[p] {
                    set.insert(FusionType::Early);
                }
                if transformed[p] && downstream[node.id] {
                    set.insert(FusionType::Hybrid);
                }
                if !downstream[node.id] {
                    set.insert(FusionType::Late);
                }
            }
        }
        if set.is_empty() {
            disconnected.push(m);
        }
        per_modality.push(set);
    }
    FusionReport { per_modality, disconnected }
}
