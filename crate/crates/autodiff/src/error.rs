use thiserror::Error;

/// Errors from tensor construction, tape operations, and the optimizer.
#[derive(Debug, Error)]
pub enum TensorError {
    #[error("data length {got} does not match shape {shape:?} ({expected} elements)")]
    LengthMismatch {
        got: usize,
        expected: usize,
        shape: Vec<usize>,
    },
    #[error("{op}: incompatible shapes {lhs:?} and {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("{op}: unsupported rank for shape {shape:?}")]
    UnsupportedRank { op: &'static str, shape: Vec<usize> },
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
    #[error("scale factor must be finite, got {0}")]
    NonFiniteScale(f64),
    #[error("backward needs a scalar loss, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
    #[error("loss does not depend on any leaf that requires gradients")]
    DetachedGraph,
    #[error("tape already consumed by a previous backward pass")]
    TapeConsumed,
    #[error("tensor reference belongs to a different tape")]
    ForeignTape,
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("got {labels} labels for {rows} logit rows")]
    LabelCountMismatch { labels: usize, rows: usize },
    #[error("{op}: window {window} with stride {stride} does not fit length {len} with pad {pad}")]
    BadWindow {
        op: &'static str,
        window: usize,
        stride: usize,
        pad: usize,
        len: usize,
    },
    #[error("stack needs at least one row")]
    EmptyStack,
    #[error("optimizer tracks {expected} parameters, got {got}")]
    ParamCountMismatch { got: usize, expected: usize },
}
