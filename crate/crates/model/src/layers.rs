use stgcn_autodiff::{Tape, TensorRef};

use crate::error::ModelError;

/// Spatial graph convolution over one sequence: for each partition `k`,
/// propagate features through that partition's normalized adjacency and mix
/// channels with its weight matrix, then sum the partitions:
///
/// ```text
/// out = sum_k  A_k * x * W_k      x: [t, v, c_in], A_k: [v, v], W_k: [c_in, c_out]
/// ```
pub fn spatial_graph_conv(
    tape: &mut Tape,
    x: TensorRef,
    adjacency: &[TensorRef],
    weights: &[TensorRef],
) -> Result<TensorRef, ModelError> {
    if adjacency.is_empty() || adjacency.len() != weights.len() {
        return Err(ModelError::PartitionCountMismatch {
            got: adjacency.len(),
            weights: weights.len(),
        });
    }
    let mut acc: Option<TensorRef> = None;
    for (&a, &w) in adjacency.iter().zip(weights) {
        let propagated = tape.matmul(a, x)?;
        let mixed = tape.matmul(propagated, w)?;
        acc = Some(match acc {
            None => mixed,
            Some(prev) => tape.add(prev, mixed)?,
        });
    }
    Ok(acc.expect("at least one partition"))
}

/// Temporal convolution over one sequence: an odd window slides along the
/// time axis of each joint independently (zero-padded so stride 1 preserves
/// the frame count), realized as unfold followed by one matrix multiply.
///
/// `weight` is `[window * c_in, c_out]`, taps ordered window-major to match
/// the unfold layout. Output is `[ceil(t / stride), v, c_out]`.
pub fn temporal_conv(
    tape: &mut Tape,
    x: TensorRef,
    weight: TensorRef,
    bias: Option<TensorRef>,
    window: usize,
    stride: usize,
) -> Result<TensorRef, ModelError> {
    if window.is_multiple_of(2) {
        return Err(ModelError::EvenTemporalKernel(window));
    }
    let pad = (window - 1) / 2;
    let unfolded = tape.unfold_time(x, window, stride, pad)?;
    let mixed = tape.matmul(unfolded, weight)?;
    match bias {
        Some(b) => Ok(tape.add_bias(mixed, b)?),
        None => Ok(mixed),
    }
}
