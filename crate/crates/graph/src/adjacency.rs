use crate::error::GraphError;
use crate::layout::GraphLayout;
use crate::partition::{PartitionAssignment, PartitionStrategy};

/// A stack of row-normalized adjacency matrices, one per partition.
/// Matrix `k` is stored row-major with `num_nodes` columns.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionedAdjacency {
    num_nodes: usize,
    matrices: Vec<Vec<f64>>,
}

impl PartitionedAdjacency {
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn partition_count(&self) -> usize {
        self.matrices.len()
    }

    /// Row-major `num_nodes * num_nodes` matrix for partition `k`.
    pub fn matrix(&self, k: usize) -> &[f64] {
        &self.matrices[k]
    }

    pub fn entry(&self, k: usize, row: usize, col: usize) -> f64 {
        self.matrices[k][row * self.num_nodes + col]
    }
}

/// Unnormalized 0/1 partition masks. Entry `(i, j)` of mask `k` is 1 when
/// node `j` belongs to partition `k` of the neighborhood rooted at `i`.
///
/// The uniform strategy needs no assignment; spatial-configuration
/// partitioning requires one built by
/// [`spatial_partition`](crate::partition::spatial_partition).
pub fn partition_masks(
    layout: &GraphLayout,
    strategy: PartitionStrategy,
    assignment: Option<&PartitionAssignment>,
) -> Result<Vec<Vec<f64>>, GraphError> {
    let v = layout.num_nodes();
    match strategy {
        PartitionStrategy::Uniform => {
            let mut mask = vec![0.0; v * v];
            for root in 0..v {
                mask[root * v + root] = 1.0;
                for &neighbor in layout.neighbors(root)? {
                    mask[root * v + neighbor] = 1.0;
                }
            }
            Ok(vec![mask])
        }
        PartitionStrategy::SpatialConfiguration => {
            let assignment = assignment.ok_or(GraphError::MissingAssignment)?;
            if assignment.num_nodes() != v {
                return Err(GraphError::AssignmentMismatch {
                    got: assignment.num_nodes(),
                    expected: v,
                });
            }
            let mut masks = vec![vec![0.0; v * v]; 3];
            for root in 0..v {
                for neighbor in layout.neighbors(root)?.iter().copied().chain([root]) {
                    let label = assignment
                        .label(root, neighbor)
                        .expect("assignment covers every neighborhood pair");
                    masks[label.index()][root * v + neighbor] = 1.0;
                }
            }
            Ok(masks)
        }
    }
}

/// Builds the normalized adjacency stack a graph convolution multiplies by:
/// the partition masks with each row divided by its sum. All-zero rows are
/// left as zeros so nodes with no member in a partition contribute nothing.
pub fn partition_adjacency(
    layout: &GraphLayout,
    strategy: PartitionStrategy,
    assignment: Option<&PartitionAssignment>,
) -> Result<PartitionedAdjacency, GraphError> {
    let v = layout.num_nodes();
    let mut matrices = partition_masks(layout, strategy, assignment)?;
    for matrix in &mut matrices {
        for row in matrix.chunks_mut(v) {
            let sum: f64 = row.iter().sum();
            if sum > 0.0 {
                for entry in row.iter_mut() {
                    *entry /= sum;
                }
            }
        }
    }
    Ok(PartitionedAdjacency {
        num_nodes: v,
        matrices,
    })
}
