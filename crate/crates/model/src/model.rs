use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use stgcn_autodiff::{Tape, Tensor, TensorRef};
use stgcn_graph::{partition_adjacency, spatial_partition, GraphLayout, PartitionStrategy};

use crate::batch::SampleBatch;
use crate::config::{ModelConfig, INPUT_CHANNELS};
use crate::error::ModelError;
use crate::layers::{spatial_graph_conv, temporal_conv};

#[derive(Clone, Copy, Debug)]
enum Residual {
    Identity,
    Projection { weight: usize, bias: usize },
}

#[derive(Clone, Debug)]
struct BlockLayout {
    spatial_weights: Vec<usize>,
    temporal_weight: usize,
    temporal_bias: usize,
    residual: Residual,
    stride: usize,
}

/// Whether a forward pass applies dropout. Training mode carries the RNG
/// that draws the dropout masks; evaluation applies none.
pub enum ForwardMode<'a> {
    Train { dropout_rng: &'a mut ChaCha8Rng },
    Eval,
}

/// Handles into the tape produced by [`StgcnModel::forward`]: the logits
/// node and one leaf per parameter, in [`StgcnModel::parameter_values`]
/// order, for collecting gradients after backward.
pub struct ForwardPass {
    pub logits: TensorRef,
    pub param_refs: Vec<TensorRef>,
}

/// Spatial-temporal graph convolutional classifier.
///
/// Each block applies a spatial graph convolution, a strided temporal
/// convolution, a residual connection (identity when shape allows, a
/// 1-frame projection otherwise), and a relu. Features are then averaged
/// over time and joints and classified by an affine layer.
#[derive(Clone, Debug)]
pub struct StgcnModel {
    config: ModelConfig,
    layout: GraphLayout,
    param_names: Vec<String>,
    param_values: Vec<Tensor>,
    blocks: Vec<BlockLayout>,
    classifier_weight: usize,
    classifier_bias: usize,
}

struct ParamPlan {
    /// name, shape, fan-in (0 for zero-initialized parameters)
    entries: Vec<(String, Vec<usize>, usize)>,
    blocks: Vec<BlockLayout>,
    classifier_weight: usize,
    classifier_bias: usize,
}

fn plan_params(config: &ModelConfig) -> ParamPlan {
    let mut entries: Vec<(String, Vec<usize>, usize)> = Vec::new();
    let mut push = |name: String, shape: Vec<usize>, fan_in: usize| -> usize {
        entries.push((name, shape, fan_in));
        entries.len() - 1
    };
    let partitions = config.strategy.partition_count();
    let window = config.temporal_kernel;
    let mut blocks = Vec::with_capacity(config.channels.len());
    let mut c_in = INPUT_CHANNELS;
    for (b, (&c_out, &stride)) in config.channels.iter().zip(&config.strides).enumerate() {
        let spatial_weights = (0..partitions)
            .map(|k| push(format!("block{b}.spatial.w{k}"), vec![c_in, c_out], c_in))
            .collect();
        let temporal_weight = push(
            format!("block{b}.temporal.weight"),
            vec![window * c_out, c_out],
            window * c_out,
        );
        let temporal_bias = push(format!("block{b}.temporal.bias"), vec![c_out], 0);
        let residual = if c_in == c_out && stride == 1 {
            Residual::Identity
        } else {
            let weight = push(format!("block{b}.residual.weight"), vec![c_in, c_out], c_in);
            let bias = push(format!("block{b}.residual.bias"), vec![c_out], 0);
            Residual::Projection { weight, bias }
        };
        blocks.push(BlockLayout {
            spatial_weights,
            temporal_weight,
            temporal_bias,
            residual,
            stride,
        });
        c_in = c_out;
    }
    let classifier_weight = push(
        "classifier.weight".to_string(),
        vec![c_in, config.num_classes],
        c_in,
    );
    let classifier_bias = push("classifier.bias".to_string(), vec![config.num_classes], 0);
    ParamPlan {
        entries,
        blocks,
        classifier_weight,
        classifier_bias,
    }
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

impl StgcnModel {
    /// Fresh model with weights drawn uniformly from
    /// `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` and biases at zero,
    /// deterministic in `seed`.
    pub fn new(config: ModelConfig, layout: GraphLayout, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        Self::check_layout(&config, &layout)?;
        let plan = plan_params(&config);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = Vec::with_capacity(plan.entries.len());
        for (_, shape, fan_in) in &plan.entries {
            let n: usize = shape.iter().product();
            let data: Vec<f64> = if *fan_in == 0 {
                vec![0.0; n]
            } else {
                let bound = 1.0 / (*fan_in as f64).sqrt();
                (0..n)
                    .map(|_| (2.0 * uniform(&mut rng) - 1.0) * bound)
                    .collect()
            };
            values.push(Tensor::new(shape.clone(), data)?);
        }
        Ok(Self::assemble(config, layout, plan, values))
    }

    /// Rebuilds a model from checkpoint parameters, which must match the
    /// architecture's names and shapes exactly.
    pub fn from_checkpoint(
        config: ModelConfig,
        layout: GraphLayout,
        mut params: Vec<(String, Tensor)>,
    ) -> Result<Self, ModelError> {
        config.validate()?;
        Self::check_layout(&config, &layout)?;
        let plan = plan_params(&config);
        let mut values = Vec::with_capacity(plan.entries.len());
        for (name, shape, _) in &plan.entries {
            let pos = params
                .iter()
                .position(|(n, _)| n == name)
                .ok_or_else(|| ModelError::MissingParam(name.clone()))?;
            let (_, tensor) = params.swap_remove(pos);
            if tensor.shape() != shape.as_slice() {
                return Err(ModelError::ParamShapeMismatch {
                    name: name.clone(),
                    got: tensor.shape().to_vec(),
                    expected: shape.clone(),
                });
            }
            values.push(tensor);
        }
        if let Some((name, _)) = params.into_iter().next() {
            return Err(ModelError::UnexpectedParam(name));
        }
        Ok(Self::assemble(config, layout, plan, values))
    }

    fn assemble(
        config: ModelConfig,
        layout: GraphLayout,
        plan: ParamPlan,
        values: Vec<Tensor>,
    ) -> Self {
        StgcnModel {
            config,
            layout,
            param_names: plan.entries.into_iter().map(|(n, _, _)| n).collect(),
            param_values: values,
            blocks: plan.blocks,
            classifier_weight: plan.classifier_weight,
            classifier_bias: plan.classifier_bias,
        }
    }

    fn check_layout(config: &ModelConfig, layout: &GraphLayout) -> Result<(), ModelError> {
        if layout.name() != config.layout {
            return Err(ModelError::LayoutNameMismatch {
                got: layout.name().to_string(),
                expected: config.layout.clone(),
            });
        }
        Ok(())
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layout(&self) -> &GraphLayout {
        &self.layout
    }

    pub fn parameter_names(&self) -> &[String] {
        &self.param_names
    }

    pub fn parameter_values(&self) -> &[Tensor] {
        &self.param_values
    }

    pub fn parameter_values_mut(&mut self) -> &mut [Tensor] {
        &mut self.param_values
    }

    /// Name/value pairs in parameter order, as written to checkpoints.
    pub fn named_parameters(&self) -> Vec<(String, Tensor)> {
        self.param_names
            .iter()
            .cloned()
            .zip(self.param_values.iter().cloned())
            .collect()
    }

    fn check_batch(&self, batch: &SampleBatch) -> Result<(), ModelError> {
        if batch.channels() != INPUT_CHANNELS {
            return Err(ModelError::ChannelMismatch {
                got: batch.channels(),
                expected: INPUT_CHANNELS,
            });
        }
        if batch.joints() != self.layout.num_nodes() {
            return Err(ModelError::JointCountMismatch {
                got: batch.joints(),
                expected: self.layout.num_nodes(),
            });
        }
        Ok(())
    }

    /// Runs the network over a batch, recording onto `tape`.
    ///
    /// With spatial-configuration partitioning the adjacency stack is built
    /// per sample from its mean pose; with the uniform strategy one stack
    /// serves the whole batch. Dropout masks (training mode only) are drawn
    /// sample-major, block-minor from the provided RNG.
    pub fn forward(
        &self,
        tape: &mut Tape,
        batch: &SampleBatch,
        mode: ForwardMode<'_>,
    ) -> Result<ForwardPass, ModelError> {
        self.check_batch(batch)?;
        let param_refs: Vec<TensorRef> = self
            .param_values
            .iter()
            .map(|t| tape.leaf(t.clone(), true))
            .collect();

        let shared_adjacency = match self.config.strategy {
            PartitionStrategy::Uniform => Some(self.leaf_adjacency(tape, None)?),
            PartitionStrategy::SpatialConfiguration => None,
        };

        let mut dropout_rng = match mode {
            ForwardMode::Train { dropout_rng } => Some(dropout_rng),
            ForwardMode::Eval => None,
        };

        let mut pooled = Vec::with_capacity(batch.size());
        for sample in 0..batch.size() {
            let adjacency = match &shared_adjacency {
                Some(refs) => refs.clone(),
                None => {
                    let pose = batch.mean_pose(sample);
                    self.leaf_adjacency(tape, Some(&pose))?
                }
            };
            let mut x = tape.leaf(
                batch.sample_frames(sample, self.config.zero_confidence),
                false,
            );
            for block in &self.blocks {
                x = self.block_forward(
                    tape,
                    x,
                    block,
                    &adjacency,
                    &param_refs,
                    dropout_rng.as_deref_mut(),
                )?;
            }
            pooled.push(tape.global_avg_pool(x)?);
        }

        let features = tape.stack_rows(&pooled)?;
        let scores = tape.matmul(features, param_refs[self.classifier_weight])?;
        let logits = tape.add_bias(scores, param_refs[self.classifier_bias])?;
        Ok(ForwardPass { logits, param_refs })
    }

    fn leaf_adjacency(
        &self,
        tape: &mut Tape,
        pose: Option<&[[f64; 2]]>,
    ) -> Result<Vec<TensorRef>, ModelError> {
        let v = self.layout.num_nodes();
        let adjacency = match self.config.strategy {
            PartitionStrategy::Uniform => {
                partition_adjacency(&self.layout, PartitionStrategy::Uniform, None)?
            }
            PartitionStrategy::SpatialConfiguration => {
                let pose = pose.expect("spatial strategy always supplies a pose");
                let assignment = spatial_partition(&self.layout, pose)?;
                partition_adjacency(
                    &self.layout,
                    PartitionStrategy::SpatialConfiguration,
                    Some(&assignment),
                )?
            }
        };
        (0..adjacency.partition_count())
            .map(|k| {
                let matrix = Tensor::new(vec![v, v], adjacency.matrix(k).to_vec())?;
                Ok(tape.leaf(matrix, false))
            })
            .collect()
    }

    fn block_forward(
        &self,
        tape: &mut Tape,
        x: TensorRef,
        block: &BlockLayout,
        adjacency: &[TensorRef],
        params: &[TensorRef],
        dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<TensorRef, ModelError> {
        let spatial_weights: Vec<TensorRef> =
            block.spatial_weights.iter().map(|&i| params[i]).collect();
        let y = spatial_graph_conv(tape, x, adjacency, &spatial_weights)?;
        let y = temporal_conv(
            tape,
            y,
            params[block.temporal_weight],
            Some(params[block.temporal_bias]),
            self.config.temporal_kernel,
            block.stride,
        )?;
        let shortcut = match block.residual {
            Residual::Identity => x,
            Residual::Projection { weight, bias } => {
                temporal_conv(tape, x, params[weight], Some(params[bias]), 1, block.stride)?
            }
        };
        let merged = tape.add(y, shortcut)?;
        let activated = tape.relu(merged)?;

        match (self.config.dropout, dropout_rng) {
            (Some(p), Some(rng)) if p > 0.0 => {
                let shape = tape.shape(activated)?.to_vec();
                let n: usize = shape.iter().product();
                let keep_scale = 1.0 / (1.0 - p);
                let mask: Vec<f64> = (0..n)
                    .map(|_| if uniform(rng) < p { 0.0 } else { keep_scale })
                    .collect();
                let mask_ref = tape.leaf(Tensor::new(shape, mask)?, false);
                Ok(tape.mul(activated, mask_ref)?)
            }
            _ => Ok(activated),
        }
    }
}

/// Indices of the `k` highest logits per row, best first; equal logits
/// rank by ascending class index.
pub fn predict_topk(logits: &Tensor, k: usize) -> Result<Vec<Vec<usize>>, ModelError> {
    let [_, classes] = *logits.shape() else {
        return Err(ModelError::BadLogitsShape(logits.shape().to_vec()));
    };
    if k == 0 || k > classes {
        return Err(ModelError::BadTopK { k, classes });
    }
    Ok(logits
        .data()
        .chunks_exact(classes)
        .map(|row| {
            let mut order: Vec<usize> = (0..classes).collect();
            order.sort_by(|&a, &b| {
                row[b]
                    .partial_cmp(&row[a])
                    .expect("logits are finite")
                    .then(a.cmp(&b))
            });
            order.truncate(k);
            order
        })
        .collect())
}
