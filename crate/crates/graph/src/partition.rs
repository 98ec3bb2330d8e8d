use serde::{Deserialize, Serialize};

use crate::error::GraphError;
use crate::layout::GraphLayout;

/// Hop distance defining the neighborhood a convolution aggregates over.
/// Both strategies use direct neighbors only.
pub const NEIGHBOR_DISTANCE: usize = 1;

/// How a node's neighborhood is divided into partitions, each with its own
/// learned weight matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionStrategy {
    /// One partition holding the node and all its neighbors.
    Uniform,
    /// Three partitions keyed on distance to the skeleton's center of
    /// gravity: the node itself, neighbors closer to the center, and
    /// neighbors farther from it.
    SpatialConfiguration,
}

impl PartitionStrategy {
    pub fn partition_count(self) -> usize {
        match self {
            PartitionStrategy::Uniform => 1,
            PartitionStrategy::SpatialConfiguration => 3,
        }
    }
}

/// Partition a neighbor falls into under spatial-configuration partitioning.
/// The discriminant doubles as the partition index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum PartitionLabel {
    Root = 0,
    Centripetal = 1,
    Centrifugal = 2,
}

impl PartitionLabel {
    pub fn index(self) -> usize {
        self as usize
    }
}

/// Labels for every (root, neighbor) pair of a layout under
/// spatial-configuration partitioning. Pairs that are not self-pairs or
/// graph edges carry no label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionAssignment {
    num_nodes: usize,
    labels: Vec<Option<PartitionLabel>>,
}

impl PartitionAssignment {
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Label of `neighbor` in the neighborhood rooted at `root`, or `None`
    /// when `neighbor` is not in that neighborhood.
    pub fn label(&self, root: usize, neighbor: usize) -> Option<PartitionLabel> {
        self.labels[root * self.num_nodes + neighbor]
    }
}

/// Mean position of all joints in a frame.
pub fn center_of_gravity(frame: &[[f64; 2]]) -> Result<[f64; 2], GraphError> {
    if frame.is_empty() {
        return Err(GraphError::EmptyFrame);
    }
    let mut sum = [0.0, 0.0];
    for (joint, pos) in frame.iter().enumerate() {
        if !pos[0].is_finite() || !pos[1].is_finite() {
            return Err(GraphError::NonFiniteCoordinate(joint));
        }
        sum[0] += pos[0];
        sum[1] += pos[1];
    }
    let n = frame.len() as f64;
    Ok([sum[0] / n, sum[1] / n])
}

/// Assigns every node and neighbor pair to a partition from a reference
/// frame of joint positions.
///
/// A node is always the root of its own neighborhood. A neighbor strictly
/// closer to the center of gravity than the root is centripetal, one
/// strictly farther is centrifugal, and a neighbor at exactly the root's
/// distance joins the root partition. Distances are compared squared, which
/// orders identically to Euclidean distance.
pub fn spatial_partition(
    layout: &GraphLayout,
    reference_frame: &[[f64; 2]],
) -> Result<PartitionAssignment, GraphError> {
    let num_nodes = layout.num_nodes();
    if reference_frame.len() != num_nodes {
        return Err(GraphError::FrameSizeMismatch {
            got: reference_frame.len(),
            expected: num_nodes,
        });
    }
    let cog = center_of_gravity(reference_frame)?;
    let dist_sq: Vec<f64> = reference_frame
        .iter()
        .map(|pos| {
            let dx = pos[0] - cog[0];
            let dy = pos[1] - cog[1];
            dx * dx + dy * dy
        })
        .collect();
    let mut labels = vec![None; num_nodes * num_nodes];
    for root in 0..num_nodes {
        labels[root * num_nodes + root] = Some(PartitionLabel::Root);
        for &neighbor in layout.neighbors(root)? {
            let label = if dist_sq[neighbor] < dist_sq[root] {
                PartitionLabel::Centripetal
            } else if dist_sq[neighbor] > dist_sq[root] {
                PartitionLabel::Centrifugal
            } else {
                PartitionLabel::Root
            };
            labels[root * num_nodes + neighbor] = Some(label);
        }
    }
    Ok(PartitionAssignment { num_nodes, labels })
}
