use thiserror::Error;

use stgcn_autodiff::TensorError;
use stgcn_graph::GraphError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("temporal kernel must be odd, got {0}")]
    EvenTemporalKernel(usize),
    #[error("model needs at least one block")]
    NoBlocks,
    #[error("got {got} strides for {blocks} blocks")]
    StrideCountMismatch { got: usize, blocks: usize },
    #[error("block {block} has zero channels")]
    ZeroChannels { block: usize },
    #[error("block {block} has stride 0")]
    ZeroStride { block: usize },
    #[error("need at least two classes, got {0}")]
    TooFewClasses(usize),
    #[error("dropout probability {0} is outside [0, 1)")]
    BadDropout(f64),
    #[error("got {got} adjacency matrices and {weights} weight matrices")]
    PartitionCountMismatch { got: usize, weights: usize },
    #[error("batch has {got} channels, expected {expected}")]
    ChannelMismatch { got: usize, expected: usize },
    #[error("batch has {got} joints, layout has {expected}")]
    JointCountMismatch { got: usize, expected: usize },
    #[error("batch data must be rank 4 [samples, channels, frames, joints], got {0:?}")]
    BadBatchShape(Vec<usize>),
    #[error("batch has {rows} samples but {labels} labels")]
    LabelCountMismatch { rows: usize, labels: usize },
    #[error("batch is empty")]
    EmptyBatch,
    #[error("checkpoint is missing parameter {0:?}")]
    MissingParam(String),
    #[error("checkpoint parameter {name:?} has shape {got:?}, expected {expected:?}")]
    ParamShapeMismatch {
        name: String,
        got: Vec<usize>,
        expected: Vec<usize>,
    },
    #[error("checkpoint has unexpected parameter {0:?}")]
    UnexpectedParam(String),
    #[error("top-k needs 1 <= k <= {classes}, got {k}")]
    BadTopK { k: usize, classes: usize },
    #[error("logits must be rank 2 [samples, classes], got {0:?}")]
    BadLogitsShape(Vec<usize>),
    #[error("layout is named {got:?} but the model config expects {expected:?}")]
    LayoutNameMismatch { got: String, expected: String },
}
