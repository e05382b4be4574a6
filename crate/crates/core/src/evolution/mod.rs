//! Warm-started tournament-selection evolution.

pub mod config;
pub mod evaluator;
pub mod population;
pub mod search;
pub mod surrogate;

pub use config::{EvaluatorKind, SearchConfig, SearchMode, SearchSpace};
pub use evaluator::{Evaluation, Evaluator, NeuralEvaluator, SurrogateEvaluator};
pub use population::{beats, tournament, Individual, Objective, Population};
pub use search::{
    best_of, best_so_far, config_hash, run_search, HistoryEntry, LogRecord, RunOptions, SearchOutcome, SearchState,
    CHECKPOINT_FORMAT,
};
pub use surrogate::{surrogate_fitness, SURROGATE_OPTIMUM};
