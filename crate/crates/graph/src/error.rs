use thiserror::Error;

/// Errors produced while building layouts or partitioning them.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error("layout must have at least one node")]
    EmptyLayout,
    #[error("edge ({0}, {1}) has an endpoint outside 0..{2}")]
    EdgeOutOfRange(usize, usize, usize),
    #[error("duplicate edge ({0}, {1}) after canonical ordering")]
    DuplicateEdge(usize, usize),
    #[error("self-loop on node {0} is not allowed in a layout")]
    SelfLoop(usize),
    #[error("center node {0} is outside 0..{1}")]
    CenterOutOfRange(usize, usize),
    #[error("node {0} is outside 0..{1}")]
    NodeOutOfRange(usize, usize),
    #[error("unknown builtin layout {0:?}")]
    UnknownBuiltin(String),
    #[error("layout is not valid JSON: {0}")]
    MalformedLayout(#[from] serde_json::Error),
    #[error("reading layout file {path}: {source}")]
    LayoutFile {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("reference frame has {got} joints, layout has {expected} nodes")]
    FrameSizeMismatch { got: usize, expected: usize },
    #[error("reference frame is empty")]
    EmptyFrame,
    #[error("reference frame has a non-finite coordinate at joint {0}")]
    NonFiniteCoordinate(usize),
    #[error("spatial-configuration partitioning requires a partition assignment")]
    MissingAssignment,
    #[error("partition assignment covers {got} nodes, layout has {expected}")]
    AssignmentMismatch { got: usize, expected: usize },
}
