mod common;

use common::random_genome;
use mufasa::graph::{classify_fusion, compile, count_parameters, CompileOptions, NodeOp};
use mufasa::space::{seed_genome, SeedKind, Vocabulary};
use mufasa::tensor::{forward, init_graph_params, Mode, ParameterStore, Tape, Tensor};
use proptest::prelude::*;

const WIDTHS: [usize; 3] = [4, 2, 4];

fn opts() -> CompileOptions {
    CompileOptions::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compiled_graphs_are_well_formed(seed in any::<u64>()) {
        let v = Vocabulary::default();
        let g = random_genome(&v, 3, seed, 2);
        let graph = compile(&g, &v, &WIDTHS, 3, &opts()).unwrap();
        prop_assert_eq!(&graph, &compile(&g, &v, &WIDTHS, 3, &opts()).unwrap());

        let succ = graph.successors();
        let outputs: Vec<_> = graph.nodes.iter().filter(|n| n.op == NodeOp::Output).collect();
        prop_assert_eq!(outputs.len(), 1);
        prop_assert_eq!(graph.outputs.clone(), vec![outputs[0].id]);
        for (i, n) in graph.nodes.iter().enumerate() {
            prop_assert_eq!(n.id, i);
            prop_assert!(n.width > 0);
            prop_assert!(n.preds.iter().all(|&p| p < n.id));
            if let NodeOp::Combiner(_) = n.op {
                prop_assert!(matches!(n.preds.len(), 1 | 2));
            }
            if n.op != NodeOp::Output && !matches!(n.op, NodeOp::Input { .. }) {
                prop_assert!(!succ[i].is_empty(), "node {} has no consumer", i);
            }
        }
        let report = classify_fusion(&graph);
        for m in 0..3 {
            prop_assert!(report.disconnected.contains(&m) || !report.strategies(m).is_empty());
        }
    }

    #[test]
    fn parameter_count_matches_engine(seed in any::<u64>()) {
        let v = Vocabulary::default();
        let g = random_genome(&v, 3, seed, 1);
        let graph = compile(&g, &v, &WIDTHS, 3, &opts()).unwrap();
        let store: ParameterStore<f32> = init_graph_params(&graph, seed).unwrap();
        prop_assert_eq!(store.scalar_count(), count_parameters(&graph));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn forward_preserves_length_and_stays_finite(seed in any::<u64>()) {
        let v = Vocabulary::default();
        let g = random_genome(&v, 3, seed, 0);
        let graph = compile(&g, &v, &WIDTHS, 3, &opts()).unwrap();
        let mut store: ParameterStore<f64> = init_graph_params(&graph, seed).unwrap();
        let run = |store: &mut ParameterStore<f64>, mode| {
            let mut tape = Tape::new();
            let inputs: Vec<_> = WIDTHS
                .iter()
                .map(|&w| tape.leaf(Tensor::from_fn([2, 3, w], |b, t, c| ((b * 7 + t * 3 + c) % 5) as f64 * 0.3 - 0.6)))
                .collect();
            let fwd = forward(&graph, store, &mut tape, &inputs, mode).unwrap();
            for (node, &var) in graph.nodes.iter().zip(&fwd.node_vars) {
                let s = tape.value(var).shape();
                assert_eq!([s[0], s[1], s[2]], [2, 3, node.width]);
            }
            tape.value(fwd.output).data().to_vec()
        };
        let a = run(&mut store, Mode::Eval);
        prop_assert!(a.iter().all(|x| x.is_finite()));
        let b = run(&mut store, Mode::Eval);
        prop_assert_eq!(a, b);
    }
}

#[test]
fn fifty_random_genomes_count_exactly() {
    let v = Vocabulary::default();
    for seed in 0..50 {
        let g = random_genome(&v, 3, 1000 + seed, 0);
        let graph = compile(&g, &v, &[8, 4, 8], 6, &opts()).unwrap();
        let store: ParameterStore<f32> = init_graph_params(&graph, seed).unwrap();
        assert_eq!(store.scalar_count(), count_parameters(&graph), "genome {seed}");
    }
}

#[test]
fn seeds_classify_as_their_kind_for_one_to_three_modalities() {
    let v = Vocabulary::default();
    for kind in SeedKind::ALL {
        for m in 1..=3 {
            let g = seed_genome(kind, m, &v).unwrap();
            let widths = vec![4; m];
            let graph = compile(&g, &v, &widths, 3, &opts()).unwrap();
            let report = classify_fusion(&graph);
            for i in 0..m {
                let got: Vec<String> = report.strategies(i).iter().map(|k| k.to_string()).collect();
                assert_eq!(got, vec![kind.to_string()], "{kind} with {m} modalities");
            }
        }
    }
}
