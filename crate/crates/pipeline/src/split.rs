//! Deterministic train/test splitting.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::PipelineError;
use crate::sample::RawSample;

/// Fisher-Yates shuffle driven by a seeded stream, so membership depends
/// only on `(n, seed)`.
fn shuffled_indices(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut indices: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        indices.swap(i, j);
    }
    indices
}

/// Shuffles `0..n` by seed and cuts it into train and test index lists.
/// The train side takes `round(n * train_ratio)` elements.
pub fn split_indices(
    n: usize,
    train_ratio: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), PipelineError> {
    if !(train_ratio > 0.0 && train_ratio < 1.0) {
        return Err(PipelineError::BadTrainRatio(train_ratio));
    }
    if n == 0 {
        return Err(PipelineError::NoSamples);
    }
    let train_size = (n as f64 * train_ratio).round() as usize;
    let side = if train_size == 0 {
        Some("train")
    } else if train_size == n {
        Some("test")
    } else {
        None
    };
    if let Some(side) = side {
        return Err(PipelineError::DegenerateSplit {
            total: n,
            ratio: train_ratio,
            side,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices = shuffled_indices(n, &mut rng);
    let test = indices.split_off(train_size);
    Ok((indices, test))
}

/// Splits samples into disjoint train and test sets in shuffled order.
pub fn split_dataset(
    samples: Vec<RawSample>,
    train_ratio: f64,
    seed: u64,
) -> Result<(Vec<RawSample>, Vec<RawSample>), PipelineError> {
    let (train_idx, test_idx) = split_indices(samples.len(), train_ratio, seed)?;
    let mut slots: Vec<Option<RawSample>> = samples.into_iter().map(Some).collect();
    let mut pick = |indices: &[usize]| -> Vec<RawSample> {
        indices
            .iter()
            .map(|&i| slots[i].take().expect("split indices are disjoint"))
            .collect()
    };
    let train = pick(&train_idx);
    let test = pick(&test_idx);
    Ok((train, test))
}
