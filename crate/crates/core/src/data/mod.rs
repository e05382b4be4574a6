//! Synthetic multimodal data and the preprocessing pipeline.

pub mod format;
pub mod generate;
pub mod preprocess;
pub mod probe;

pub use generate::{generate, Dataset, DatasetSpec, Example, BAG_HOURS, CONTEXT_DIM};
pub use preprocess::{bag_aggregate, locf_impute, zscore_clamp, Bag, Event, NormStats, CLAMP_SIGMA};
pub use probe::{fit_probe, ProbeInput, ProbeResult};
