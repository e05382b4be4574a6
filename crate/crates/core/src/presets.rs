//! Desk-scale settings for searches that must finish on one machine.
//!
//! The defaults elsewhere in the crate follow the full-size configuration
//! (population 100, 5000 candidates, learning rate 4.23e-4). At the tiny
//! widths used here that learning rate leaves the initial loss plateau too
//! slowly for 2000 steps, so these presets raise it.

use crate::data::DatasetSpec;
use crate::evolution::{EvaluatorKind, SearchConfig, SearchMode, SearchSpace};
use crate::space::SeedKind;
use crate::train::{ModelConfig, Precision, Routing, Schedule, TrainConfig};

pub const DESK_EXAMPLES: usize = 1500;
pub const DESK_LR: f64 = 3e-3;
pub const DESK_STEPS: usize = 2000;
pub const DESK_POPULATION: usize = 10;
pub const DESK_TOURNAMENT: usize = 3;
pub const DESK_CANDIDATES: usize = 200;

pub fn desk_dataset(lambda: f64, seed: u64) -> DatasetSpec {
    DatasetSpec { num_examples: DESK_EXAMPLES, lambda, seed, ..Default::default() }
}

pub fn desk_model(routing: Routing) -> ModelConfig {
    ModelConfig { widths: [8, 4, 8], routing }
}

pub fn desk_train(seed: u64) -> TrainConfig {
    TrainConfig {
        steps: DESK_STEPS,
        batch_size: 32,
        peak_lr: DESK_LR,
        schedule: Schedule::Cosine,
        seed,
        precision: Precision::F32,
        ..Default::default()
    }
}

pub fn desk_search(space: SearchSpace, seed: u64) -> SearchConfig {
    SearchConfig {
        population: DESK_POPULATION,
        tournament: DESK_TOURNAMENT,
        candidates: DESK_CANDIDATES,
        space,
        seed_kind: SeedKind::Hybrid,
        seed,
        evaluator: EvaluatorKind::Neural,
        mode: SearchMode::Sync,
        ..Default::default()
    }
}

/// Input routing that matches a search space.
pub fn routing_for(space: SearchSpace) -> Routing {
    match space {
        SearchSpace::Multimodal => Routing::PerModality,
        SearchSpace::Unimodal => Routing::Concatenated,
    }
}
