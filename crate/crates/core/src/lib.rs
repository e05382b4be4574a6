//! Multimodal fusion architecture search.
//!
//! The crate searches jointly over per-modality architectures and a fusion
//! architecture with tournament-selection evolution. Genomes compile into
//! typed computation graphs that a small reverse-mode tensor engine trains
//! on synthetic multimodal sequence data.

#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod data;
pub mod error;
pub mod evolution;
pub mod graph;
pub mod presets;
pub mod space;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
