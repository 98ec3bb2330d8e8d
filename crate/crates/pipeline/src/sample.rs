//! Labeled skeleton samples flowing between pipeline stages.
//!
//! Stages exchange samples as JSON lines: one `RawSample` object per line,
//! frames stored as `[[x, y, c], ...]` per frame. The format is an
//! interchange detail of this pipeline, not a corpus standard.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::PipelineError;

/// One segmented sign sample: the frames of a single annotation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawSample {
    /// `{video_id}:{start_frame}-{end_frame}` of the source annotation.
    pub sample_id: String,
    /// Sign gloss.
    pub label: String,
    pub signer_id: String,
    pub articulation_id: u32,
    /// T frames of V keypoints, each `[x, y, confidence]`.
    pub frames: Vec<Vec<[f64; 3]>>,
}

impl RawSample {
    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn num_keypoints(&self) -> usize {
        self.frames.first().map_or(0, Vec::len)
    }

    /// All frames carry the same keypoint count and the sample is
    /// non-empty.
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.frames.is_empty() {
            return Err(PipelineError::EmptySample {
                id: self.sample_id.clone(),
            });
        }
        let expected = self.frames[0].len();
        for (frame, points) in self.frames.iter().enumerate() {
            if points.len() != expected {
                return Err(PipelineError::RaggedSample {
                    id: self.sample_id.clone(),
                    frame,
                    got: points.len(),
                    expected,
                });
            }
        }
        Ok(())
    }
}

/// Writes samples as JSON lines.
pub fn write_samples<W: Write>(mut out: W, samples: &[RawSample]) -> std::io::Result<()> {
    for sample in samples {
        serde_json::to_writer(&mut out, sample)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads samples from JSON lines, validating each.
pub fn read_samples<R: BufRead>(reader: R) -> Result<Vec<RawSample>, PipelineError> {
    let mut samples = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| PipelineError::Io {
            path: "<stream>".into(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let sample: RawSample =
            serde_json::from_str(&line).map_err(|source| PipelineError::MalformedSample {
                line: index + 1,
                source,
            })?;
        sample.validate()?;
        samples.push(sample);
    }
    Ok(samples)
}

pub fn write_samples_file(path: &Path, samples: &[RawSample]) -> Result<(), PipelineError> {
    let file = std::fs::File::create(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_samples(std::io::BufWriter::new(file), samples).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_samples_file(path: &Path) -> Result<Vec<RawSample>, PipelineError> {
    let file = std::fs::File::open(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_samples(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(id: &str, frames: usize, points: usize) -> RawSample {
        RawSample {
            sample_id: id.to_string(),
            label: "walk".to_string(),
            signer_id: "s1".to_string(),
            articulation_id: 0,
            frames: (0..frames)
                .map(|t| (0..points).map(|v| [t as f64, v as f64, 0.5]).collect())
                .collect(),
        }
    }

    #[test]
    fn json_lines_round_trip() {
        let samples = vec![sample("a:0-3", 4, 2), sample("b:5-5", 1, 2)];
        let mut bytes = Vec::new();
        write_samples(&mut bytes, &samples).unwrap();
        assert_eq!(bytes.iter().filter(|&&b| b == b'\n').count(), 2);
        let back = read_samples(bytes.as_slice()).unwrap();
        assert_eq!(back, samples);
    }

    #[test]
    fn blank_lines_are_skipped() {
        let samples = vec![sample("a:0-1", 2, 1)];
        let mut bytes = Vec::new();
        write_samples(&mut bytes, &samples).unwrap();
        bytes.extend_from_slice(b"\n\n");
        assert_eq!(read_samples(bytes.as_slice()).unwrap(), samples);
    }

    #[test]
    fn malformed_line_reports_its_line_number() {
        let mut bytes = Vec::new();
        write_samples(&mut bytes, &[sample("a:0-1", 2, 1)]).unwrap();
        bytes.extend_from_slice(b"{not json\n");
        assert!(matches!(
            read_samples(bytes.as_slice()),
            Err(PipelineError::MalformedSample { line: 2, .. })
        ));
    }

    #[test]
    fn ragged_frames_are_rejected_on_read() {
        let mut bad = sample("a:0-1", 2, 3);
        bad.frames[1].pop();
        let mut bytes = Vec::new();
        write_samples(&mut bytes, &[bad]).unwrap();
        assert!(matches!(
            read_samples(bytes.as_slice()),
            Err(PipelineError::RaggedSample {
                frame: 1,
                got: 2,
                expected: 3,
                ..
            })
        ));
    }

    #[test]
    fn empty_sample_is_rejected() {
        let bad = RawSample {
            sample_id: "a:0-0".to_string(),
            label: "walk".to_string(),
            signer_id: "s1".to_string(),
            articulation_id: 0,
            frames: Vec::new(),
        };
        assert!(matches!(
            bad.validate(),
            Err(PipelineError::EmptySample { .. })
        ));
    }
}
