//! Skeleton graph layouts and the adjacency machinery of a spatial-temporal
//! graph convolution.
//!
//! A [`GraphLayout`] fixes the joint set and bone edges. A
//! [`PartitionStrategy`] splits each node's 1-hop neighborhood into
//! partitions, either uniformly or by comparing joint distances to the
//! skeleton's center of gravity, and [`partition_adjacency`] turns the
//! result into the stack of row-normalized matrices the convolution
//! multiplies by.

mod adjacency;
mod error;
mod layout;
mod partition;

pub use adjacency::{partition_adjacency, partition_masks, PartitionedAdjacency};
pub use error::GraphError;
pub use layout::{GraphLayout, LayoutSpec};
pub use partition::{
    center_of_gravity, spatial_partition, PartitionAssignment, PartitionLabel, PartitionStrategy,
    NEIGHBOR_DISTANCE,
};
