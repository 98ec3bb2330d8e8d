use stgcn_autodiff::Tensor;

use crate::error::ModelError;

/// A batch of skeleton sequences, stored `[samples, channels, frames,
/// joints]`, with one class label per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    data: Tensor,
    labels: Vec<usize>,
}

impl SampleBatch {
    pub fn new(data: Tensor, labels: Vec<usize>) -> Result<Self, ModelError> {
        let [n, _, _, _] = *data.shape() else {
            return Err(ModelError::BadBatchShape(data.shape().to_vec()));
        };
        if n == 0 {
            return Err(ModelError::EmptyBatch);
        }
        if labels.len() != n {
            return Err(ModelError::LabelCountMismatch {
                rows: n,
                labels: labels.len(),
            });
        }
        Ok(SampleBatch { data, labels })
    }

    pub fn size(&self) -> usize {
        self.data.shape()[0]
    }

    pub fn channels(&self) -> usize {
        self.data.shape()[1]
    }

    pub fn frames(&self) -> usize {
        self.data.shape()[2]
    }

    pub fn joints(&self) -> usize {
        self.data.shape()[3]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn data(&self) -> &Tensor {
        &self.data
    }

    /// One sample reordered channels-last as `[frames, joints, channels]`,
    /// the layout the convolution layers consume. `zero_confidence` blanks
    /// channel 2 on the way out.
    pub fn sample_frames(&self, sample: usize, zero_confidence: bool) -> Tensor {
        let (c, t, v) = (self.channels(), self.frames(), self.joints());
        let src = self.data.data();
        let base = sample * c * t * v;
        let mut out = vec![0.0; t * v * c];
        for ch in 0..c {
            if zero_confidence && ch == 2 {
                continue;
            }
            for ti in 0..t {
                for vi in 0..v {
                    out[(ti * v + vi) * c + ch] = src[base + (ch * t + ti) * v + vi];
                }
            }
        }
        Tensor::new(vec![t, v, c], out).expect("batch data is finite")
    }

    /// Mean x/y position of each joint over all frames of one sample, the
    /// reference pose for spatial-configuration partitioning.
    pub fn mean_pose(&self, sample: usize) -> Vec<[f64; 2]> {
        let (c, t, v) = (self.channels(), self.frames(), self.joints());
        let src = self.data.data();
        let base = sample * c * t * v;
        let mut pose = vec![[0.0, 0.0]; v];
        for ti in 0..t {
            for vi in 0..v {
                pose[vi][0] += src[base + ti * v + vi];
                pose[vi][1] += src[base + (t + ti) * v + vi];
            }
        }
        for p in &mut pose {
            p[0] /= t as f64;
            p[1] /= t as f64;
        }
        pose
    }
}
