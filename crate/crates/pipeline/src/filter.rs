//! Keypoint selection: reducing full pose estimates to the joints a
//! layout actually uses.
//!
//! A filter file is JSON with `source_count` (how many keypoints each
//! input frame must carry) and `indices` (which of them to keep, in
//! output order; position in this list becomes the layout node id).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::PipelineError;
use crate::sample::RawSample;

/// The default selection of 27 points from a 130-point estimate: neck,
/// both shoulders and elbows, then wrist plus every other hand point for
/// each hand.
const SIGN_27_FILTER: &str = include_str!("../filters/openpose-130-to-sign-27.json");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeypointFilter {
    pub source_count: usize,
    pub indices: Vec<usize>,
}

impl KeypointFilter {
    pub fn new(source_count: usize, indices: Vec<usize>) -> Result<Self, PipelineError> {
        let filter = KeypointFilter {
            source_count,
            indices,
        };
        filter.validate()?;
        Ok(filter)
    }

    fn validate(&self) -> Result<(), PipelineError> {
        if self.indices.is_empty() {
            return Err(PipelineError::EmptyFilter);
        }
        let mut seen = vec![false; self.source_count];
        for &index in &self.indices {
            if index >= self.source_count {
                return Err(PipelineError::FilterIndexOutOfRange {
                    index,
                    source_count: self.source_count,
                });
            }
            if seen[index] {
                return Err(PipelineError::DuplicateFilterIndex { index });
            }
            seen[index] = true;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let filter: KeypointFilter =
            serde_json::from_str(text).map_err(PipelineError::MalformedFilter)?;
        filter.validate()?;
        Ok(filter)
    }

    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// The named builtin filter, currently just
    /// `openpose-130-to-sign-27`.
    pub fn builtin(name: &str) -> Result<Self, PipelineError> {
        match name {
            "openpose-130-to-sign-27" => Self::from_json(SIGN_27_FILTER),
            other => Err(PipelineError::UnknownBuiltinFilter(other.to_string())),
        }
    }

    pub fn builtin_names() -> &'static [&'static str] {
        &["openpose-130-to-sign-27"]
    }

    /// Resolves a builtin name first, then a file path.
    pub fn resolve(name_or_path: &str) -> Result<Self, PipelineError> {
        match Self::builtin(name_or_path) {
            Err(PipelineError::UnknownBuiltinFilter(_)) => Self::from_file(Path::new(name_or_path)),
            other => other,
        }
    }

    pub fn output_count(&self) -> usize {
        self.indices.len()
    }
}

/// Keeps exactly the filtered points of every frame, in filter order.
pub fn filter_keypoints(
    sample: &RawSample,
    filter: &KeypointFilter,
) -> Result<RawSample, PipelineError> {
    let mut out = sample.clone();
    for frame in &mut out.frames {
        if frame.len() != filter.source_count {
            return Err(PipelineError::FilterSourceMismatch {
                id: sample.sample_id.clone(),
                got: frame.len(),
                expected: filter.source_count,
            });
        }
        *frame = filter.indices.iter().map(|&i| frame[i]).collect();
    }
    Ok(out)
}

/// Applies one filter to every sample.
pub fn filter_all(
    samples: &[RawSample],
    filter: &KeypointFilter,
) -> Result<Vec<RawSample>, PipelineError> {
    samples
        .iter()
        .map(|sample| filter_keypoints(sample, filter))
        .collect()
}
