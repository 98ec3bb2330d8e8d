use std::path::PathBuf;

use thiserror::Error;

use stgcn_autodiff::{CheckpointError, TensorError};
use stgcn_model::ModelError;
use stgcn_pipeline::PipelineError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("malformed experiment config {path}: {source}")]
    MalformedConfig {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("malformed model config {path}: {source}")]
    MalformedModelConfig {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("batch size must be at least 1")]
    ZeroBatchSize,
    #[error("epoch count must be at least 1")]
    ZeroEpochs,
    #[error("learning rate {0} must be positive and finite")]
    BadLearningRate(f64),
    #[error("decay factor {0} must lie in (0, 1]")]
    BadDecayFactor(f64),
    #[error("evaluation cadence must be at least 1")]
    ZeroEvalEvery,
    #[error("stop threshold {0} must lie in (0, 1]")]
    BadStopThreshold(f64),
    #[error("bundle {path} has no samples")]
    EmptyBundle { path: PathBuf },
    #[error("model expects layout {model:?} but bundle {path} carries {bundle:?}")]
    LayoutMismatch {
        model: String,
        bundle: String,
        path: PathBuf,
    },
    #[error("model expects {model} classes but bundle {path} has {bundle}")]
    ClassCountMismatch {
        model: usize,
        bundle: usize,
        path: PathBuf,
    },
    #[error("bundle {path} stores {got} channels per joint, expected {expected}")]
    ChannelCountMismatch {
        got: usize,
        expected: usize,
        path: PathBuf,
    },
    #[error("bundles disagree on shape: train is {train_t}x{train_v}, eval is {eval_t}x{eval_v}")]
    BundleShapeMismatch {
        train_t: usize,
        train_v: usize,
        eval_t: usize,
        eval_v: usize,
    },
    #[error("checkpoint {path} has no model description sidecar {sidecar}")]
    MissingSidecar { path: PathBuf, sidecar: PathBuf },
    #[error("synthetic data needs at least 2 classes, got {0}")]
    TooFewSynthClasses(usize),
    #[error("synthetic data needs at least 1 train sample per class")]
    NoTrainSamples,
    #[error("synthetic data needs positive frame and joint counts")]
    EmptySynthShape,
    #[error("metrics line {line}: {source}")]
    MalformedMetrics {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("metrics window {from}..={to} is empty or reversed")]
    BadWindow { from: usize, to: usize },
    #[error("no metrics records fall inside the window {from}..={to}")]
    EmptyWindow { from: usize, to: usize },
    #[error("top-k list must not be empty")]
    NoTopK,
    #[error("{path} is neither a dataset bundle nor a checkpoint")]
    UnknownFileKind { path: PathBuf },
}

impl HarnessError {
    /// Whether this failure is a numeric breakdown (non-finite values
    /// reached the computation) rather than a data or configuration
    /// problem. The two map to different process exit codes.
    pub fn is_numeric(&self) -> bool {
        fn numeric_tensor(e: &TensorError) -> bool {
            matches!(
                e,
                TensorError::NonFinite(_) | TensorError::NonFiniteScale(_)
            )
        }
        match self {
            HarnessError::Model(ModelError::Tensor(e)) => numeric_tensor(e),
            HarnessError::Checkpoint(CheckpointError::NonFinite(_)) => true,
            _ => false,
        }
    }
}
