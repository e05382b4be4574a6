//! Training of compiled candidates and their fitness.

pub mod evaluate;
pub mod metrics;
pub mod model;
pub mod schedule;

pub use evaluate::{
    evaluate_candidate, loss_increase, score, train_candidate, train_graph, FitnessResult, Precision, TrainConfig, Trained,
    LOSS_WINDOW,
};
pub use metrics::{in_top_k, recall_at_k};
pub use model::{init_model, model_forward, predict, wrapper_param_specs, DataShape, ModelConfig, Routing, MODALITIES, MODALITY_NAMES};
pub use schedule::{lr_at, Schedule};
