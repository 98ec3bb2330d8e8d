use serde::{Deserialize, Serialize};

use stgcn_graph::PartitionStrategy;

use crate::error::ModelError;

/// Coordinate channels per joint: x, y, and detection confidence.
pub const INPUT_CHANNELS: usize = 3;

/// Architecture description, serialized as JSON next to checkpoints so a
/// saved model can be rebuilt without the training configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Layout name: a builtin, or whatever name the dataset's embedded
    /// layout carries.
    pub layout: String,
    pub strategy: PartitionStrategy,
    /// Output channels per block, in order.
    pub channels: Vec<usize>,
    /// Temporal stride per block; must pair with `channels`.
    pub strides: Vec<usize>,
    /// Width of the temporal convolution window; odd so that stride-1
    /// blocks preserve the frame count.
    pub temporal_kernel: usize,
    pub num_classes: usize,
    /// Per-block dropout probability applied after the activation during
    /// training. `None` disables dropout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dropout: Option<f64>,
    /// Zero the confidence channel on input, for data whose detector
    /// confidences are unreliable.
    #[serde(default)]
    pub zero_confidence: bool,
}

impl ModelConfig {
    /// Three-block network (64, 64, 128 channels, final block at temporal
    /// stride 2) over the sign-27 layout with spatial-configuration
    /// partitioning and a 9-frame temporal window.
    pub fn baseline(num_classes: usize) -> Self {
        ModelConfig {
            layout: "sign-27".to_string(),
            strategy: PartitionStrategy::SpatialConfiguration,
            channels: vec![64, 64, 128],
            strides: vec![1, 1, 2],
            temporal_kernel: 9,
            num_classes,
            dropout: None,
            zero_confidence: false,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.channels.is_empty() {
            return Err(ModelError::NoBlocks);
        }
        if self.strides.len() != self.channels.len() {
            return Err(ModelError::StrideCountMismatch {
                got: self.strides.len(),
                blocks: self.channels.len(),
            });
        }
        for (block, &ch) in self.channels.iter().enumerate() {
            if ch == 0 {
                return Err(ModelError::ZeroChannels { block });
            }
        }
        for (block, &s) in self.strides.iter().enumerate() {
            if s == 0 {
                return Err(ModelError::ZeroStride { block });
            }
        }
        if self.temporal_kernel.is_multiple_of(2) {
            return Err(ModelError::EvenTemporalKernel(self.temporal_kernel));
        }
        if self.num_classes < 2 {
            return Err(ModelError::TooFewClasses(self.num_classes));
        }
        if let Some(p) = self.dropout {
            if !(0.0..1.0).contains(&p) {
                return Err(ModelError::BadDropout(p));
            }
        }
        Ok(())
    }

    /// Frame count after all blocks: each stride-`s` block maps `t` frames
    /// to `ceil(t / s)`.
    pub fn output_frames(&self, input_frames: usize) -> usize {
        self.strides
            .iter()
            .fold(input_frames, |t, &s| t.div_ceil(s))
    }
}
