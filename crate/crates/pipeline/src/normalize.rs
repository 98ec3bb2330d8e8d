//! Fixed-length normalization of sample frame counts.

use crate::error::PipelineError;
use crate::sample::RawSample;

/// The fixed frame count datasets are normalized to unless configured
/// otherwise.
pub const DEFAULT_TARGET_FRAMES: usize = 63;

/// Brings a sample to exactly `target` frames: short samples repeat their
/// frames cyclically from the start, long samples keep only their first
/// `target` frames.
pub fn normalize_length(sample: &RawSample, target: usize) -> Result<RawSample, PipelineError> {
    if target == 0 {
        return Err(PipelineError::ZeroTargetFrames);
    }
    if sample.frames.is_empty() {
        return Err(PipelineError::EmptySample {
            id: sample.sample_id.clone(),
        });
    }
    let mut out = sample.clone();
    let t = sample.frames.len();
    if t > target {
        out.frames.truncate(target);
    } else if t < target {
        out.frames = (0..target).map(|i| sample.frames[i % t].clone()).collect();
    }
    Ok(out)
}

/// Normalizes every sample to the same frame count.
pub fn normalize_all(
    samples: &[RawSample],
    target: usize,
) -> Result<Vec<RawSample>, PipelineError> {
    samples
        .iter()
        .map(|sample| normalize_length(sample, target))
        .collect()
}
