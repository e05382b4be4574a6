use crate::data::Dataset;
use crate::error::Result;
use crate::evolution::surrogate::surrogate_fitness;
use crate::graph::compile::{compile, CompileOptions};
use crate::graph::export::to_graph_json;
use crate::space::{Genome, Vocabulary};
use crate::train::{evaluate_candidate, FitnessResult, ModelConfig, TrainConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Instant;

/// Fitness of one candidate as the search records it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub fitness: f64,
    pub rejected: Option<String>,
    pub wall_time: f64,
    pub parameter_count: u64,
    pub test_recall: Option<f64>,
}

impl Evaluation {
    pub fn failed(reason: String) -> Self {
        Evaluation { fitness: 0.0, rejected: Some(reason), wall_time: 0.0, parameter_count: 0, test_recall: None }
    }
}

impl From<&FitnessResult> for Evaluation {
    fn from(r: &FitnessResult) -> Self {
        Evaluation {
            fitness: r.fitness,
            rejected: r.rejected.clone(),
            wall_time: r.wall_time,
            parameter_count: r.parameter_count,
            test_recall: r.test_recall,
        }
    }
}

/// Stateless as far as the search can tell: the same genome always gets
/// the same fitness.
pub trait Evaluator: Sync {
    fn evaluate(&self, genome: &Genome) -> Result<Evaluation>;

    /// Everything that determines fitness besides the genome, folded into
    /// the checkpoint configuration hash.
    fn fingerprint(&self) -> String;
}

pub struct SurrogateEvaluator {
    pub vocab: Vocabulary,
}

impl Evaluator for SurrogateEvaluator {
    fn evaluate(&self, genome: &Genome) -> Result<Evaluation> {
        let start = Instant::now();
        let fitness = surrogate_fitness(genome, &self.vocab);
        Ok(Evaluation { fitness, rejected: None, wall_time: start.elapsed().as_secs_f64(), parameter_count: 0, test_recall: None })
    }

    fn fingerprint(&self) -> String {
        format!("surrogate {}", serde_json::to_string(&self.vocab).expect("vocabulary serializes"))
    }
}

/// Trains every candidate on a dataset.
///
/// The training seed of a candidate is derived from its compiled graph, so
/// genomes that differ only in fields the graph ignores share one training
/// run, and a fitness never depends on evaluation order.
pub struct NeuralEvaluator {
    pub vocab: Vocabulary,
    pub dataset: Dataset,
    pub model: ModelConfig,
    pub train: TrainConfig,
    cache: Mutex<HashMap<[u8; 32], Evaluation>>,
}

impl NeuralEvaluator {
    pub fn new(vocab: Vocabulary, dataset: Dataset, model: ModelConfig, train: TrainConfig) -> Self {
        NeuralEvaluator { vocab, dataset, model, train, cache: Mutex::new(HashMap::new()) }
    }

    /// Number of distinct graphs trained so far.
    pub fn trained(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }
}

impl Evaluator for NeuralEvaluator {
    fn evaluate(&self, genome: &Genome) -> Result<Evaluation> {
        let opts = CompileOptions { max_width: self.train.max_width };
        let graph = match compile(genome, &self.vocab, &self.model.graph_widths(), self.dataset.spec.seq_len, &opts) {
            Ok(g) => g,
            Err(_) => return Ok(Evaluation::from(&evaluate_candidate(genome, &self.vocab, &self.dataset, &self.model, &self.train)?)),
        };
        let key: [u8; 32] = Sha256::digest(to_graph_json(&graph).as_bytes()).into();
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }
        let mut cfg = self.train.clone();
        cfg.seed ^= u64::from_le_bytes(key[..8].try_into().expect("8 bytes"));
        let result = Evaluation::from(&evaluate_candidate(genome, &self.vocab, &self.dataset, &self.model, &cfg)?);
        self.cache.lock().expect("cache lock").insert(key, result.clone());
        Ok(result)
    }

    fn fingerprint(&self) -> String {
        let parts = (&self.vocab, &self.dataset.spec, &self.model, &self.train);
        format!("neural {}", serde_json::to_string(&parts).expect("configuration serializes"))
    }
}
