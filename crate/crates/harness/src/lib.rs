//! Training and evaluation harness: experiment configs, the training
//! loop, accuracy metrics, synthetic data, and file inspection.

pub mod config;
pub mod data;
pub mod error;
pub mod inspect;
pub mod metrics;
pub mod synth;
pub mod train;

pub use config::ExperimentConfig;
pub use data::{batch_from_bundle, check_compatible};
pub use error::HarnessError;
pub use inspect::inspect_file;
pub use metrics::{
    accuracy_at_k, append_record, count_topk_hits, metrics_equal_ignoring_time, read_metrics_file,
    windowed_mean, MetricsRecord, WindowReport,
};
pub use synth::{generate_synthetic, SynthSpec};
pub use train::{evaluate, load_model, save_model, train, TrainOutcome};
