//! A spatial-temporal graph convolutional network for skeleton-sequence
//! classification.
//!
//! The building blocks are [`spatial_graph_conv`], which mixes joint
//! features through partitioned, row-normalized adjacency matrices, and
//! [`temporal_conv`], a per-joint windowed convolution along the time axis.
//! [`StgcnModel`] stacks residual blocks of the two, pools over time and
//! joints, and classifies with an affine layer.

mod batch;
mod config;
mod error;
mod layers;
mod model;

pub use batch::SampleBatch;
pub use config::{ModelConfig, INPUT_CHANNELS};
pub use error::ModelError;
pub use layers::{spatial_graph_conv, temporal_conv};
pub use model::{predict_topk, ForwardMode, ForwardPass, StgcnModel};
