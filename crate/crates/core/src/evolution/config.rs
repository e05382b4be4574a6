use crate::error::{Error, Result};
use crate::space::{seed_genome, unimodal_seed, Genome, SeedKind, Vocabulary};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

/// Which architecture space a search explores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchSpace {
    /// Three modality architectures and a fusion architecture, warm-started
    /// from the seed of the configured fusion kind.
    Multimodal,
    /// One input holding every modality, warm-started from the unimodal
    /// early-fusion seed.
    Unimodal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    /// One evaluation in flight; bit-reproducible.
    Sync,
    /// Up to `workers` evaluations in flight.
    Async,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvaluatorKind {
    Neural,
    Surrogate,
}

macro_rules! parse_kebab {
    ($t:ty, $what:literal) => {
        impl FromStr for $t {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                serde_json::from_value(serde_json::Value::String(s.to_string()))
                    .map_err(|_| Error::InvalidArgument(format!(concat!("unknown ", $what, " {:?}"), s)))
            }
        }
    };
}

parse_kebab!(SearchSpace, "search space");
parse_kebab!(SearchMode, "search mode");
parse_kebab!(EvaluatorKind, "evaluator");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    pub population: usize,
    pub tournament: usize,
    pub candidates: usize,
    pub mutation_rate: f64,
    pub space: SearchSpace,
    pub seed_kind: SeedKind,
    pub seed: u64,
    pub evaluator: EvaluatorKind,
    pub mode: SearchMode,
    /// Concurrent evaluations in asynchronous mode; defaults to the
    /// available parallelism.
    pub workers: usize,
    /// Checkpoint after every this many completed candidates.
    pub checkpoint_every: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            population: 100,
            tournament: 30,
            candidates: 5000,
            mutation_rate: 0.01875,
            space: SearchSpace::Multimodal,
            seed_kind: SeedKind::Hybrid,
            seed: 0,
            evaluator: EvaluatorKind::Neural,
            mode: SearchMode::Sync,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            checkpoint_every: 1,
        }
    }
}

impl SearchConfig {
    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.population == 0 {
            return bad("population must be positive".into());
        }
        if self.tournament == 0 || self.tournament > self.population {
            return bad(format!("tournament size {} must be in 1..={}", self.tournament, self.population));
        }
        if self.candidates == 0 {
            return bad("candidate budget must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad(format!("mutation rate {} outside [0, 1]", self.mutation_rate));
        }
        if self.workers == 0 {
            return bad("need at least one worker".into());
        }
        if self.checkpoint_every == 0 {
            return bad("checkpoint interval must be positive".into());
        }
        Ok(())
    }

    /// Number of modality architectures in the searched genomes.
    pub fn modalities(&self) -> usize {
        match self.space {
            SearchSpace::Multimodal => 3,
            SearchSpace::Unimodal => 1,
        }
    }

    /// The warm-start genome every initial individual mutates from.
    pub fn seed_genome(&self, vocab: &Vocabulary) -> Result<Genome> {
        match self.space {
            SearchSpace::Multimodal => seed_genome(self.seed_kind, 3, vocab),
            SearchSpace::Unimodal => unimodal_seed(vocab),
        }
    }
}
