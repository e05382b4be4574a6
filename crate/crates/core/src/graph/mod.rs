//! Computation-graph compilation, parameter accounting, fusion analysis and
//! diagram export.

pub mod compile;
pub mod dot;
pub mod export;
pub mod fusion;

pub use compile::{
    compile, node_parameters, CompileOptions, ComputationGraph, NodeKind, NodeOp, NodeSpec, Tag,
};
pub use dot::to_dot;
pub use export::to_graph_json;
pub use fusion::{classify_fusion, FusionReport, FusionType};

/// Total trainable scalars of a compiled graph.
pub fn count_parameters(graph: &ComputationGraph) -> u64 {
    graph.parameter_count
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetDecision {
    Accept,
    Reject { count: u64, budget: u64 },
}

/// Rejects graphs whose parameter count exceeds `budget`.
pub fn enforce_budget(graph: &ComputationGraph, budget: u64) -> BudgetDecision {
    let count = count_parameters(graph);
    if count > budget {
        BudgetDecision::Reject { count, budget }
    } else {
        BudgetDecision::Accept
    }
}
