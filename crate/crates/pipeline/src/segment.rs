//! Cutting annotated frame ranges out of whole-video keypoint sequences.

use std::collections::BTreeMap;

use crate::annotations::SignAnnotation;
use crate::error::PipelineError;
use crate::pose::PoseFrame;
use crate::sample::RawSample;

/// Extracts one sample per annotation, keeping frames with indices in the
/// inclusive range `[start_frame, end_frame]`. Every index in the range
/// must be present in the video.
pub fn segment_samples(
    annotations: &[SignAnnotation],
    videos: &BTreeMap<String, Vec<PoseFrame>>,
) -> Result<Vec<RawSample>, PipelineError> {
    let mut samples = Vec::with_capacity(annotations.len());
    let mut seen_ids = std::collections::BTreeSet::new();
    for annotation in annotations {
        let frames =
            videos
                .get(&annotation.video_id)
                .ok_or_else(|| PipelineError::UnknownVideo {
                    video: annotation.video_id.clone(),
                })?;
        let min = frames.first().map(|f| f.frame_index).unwrap_or(0);
        let max = frames.last().map(|f| f.frame_index).unwrap_or(0);
        if annotation.start_frame < min || annotation.end_frame > max {
            return Err(PipelineError::RangeOutsideVideo {
                video: annotation.video_id.clone(),
                label: annotation.label.clone(),
                start: annotation.start_frame,
                end: annotation.end_frame,
                min,
                max,
            });
        }
        let start = frames.partition_point(|f| f.frame_index < annotation.start_frame);
        let selected: Vec<&PoseFrame> = frames[start..]
            .iter()
            .take_while(|f| f.frame_index <= annotation.end_frame)
            .collect();
        let expected = (annotation.end_frame - annotation.start_frame + 1) as usize;
        if selected.len() != expected {
            let mut want = annotation.start_frame;
            for frame in &selected {
                if frame.frame_index != want {
                    break;
                }
                want += 1;
            }
            return Err(PipelineError::MissingFrame {
                video: annotation.video_id.clone(),
                frame: want,
            });
        }
        let sample_id = format!(
            "{}:{}-{}",
            annotation.video_id, annotation.start_frame, annotation.end_frame
        );
        if !seen_ids.insert(sample_id.clone()) {
            return Err(PipelineError::DuplicateSampleId { id: sample_id });
        }
        samples.push(RawSample {
            sample_id,
            label: annotation.label.clone(),
            signer_id: annotation.signer_id.clone(),
            articulation_id: annotation.articulation_id,
            frames: selected.iter().map(|f| f.keypoints.clone()).collect(),
        });
    }
    if samples.is_empty() {
        return Err(PipelineError::NoSamples);
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn video(indices: &[i64], points: usize) -> Vec<PoseFrame> {
        indices
            .iter()
            .map(|&frame_index| PoseFrame {
                frame_index,
                keypoints: (0..points)
                    .map(|v| [frame_index as f64, v as f64, 1.0])
                    .collect(),
            })
            .collect()
    }

    fn annotation(label: &str, video: &str, start: i64, end: i64) -> SignAnnotation {
        SignAnnotation {
            label: label.to_string(),
            video_id: video.to_string(),
            start_frame: start,
            end_frame: end,
            signer_id: "s1".to_string(),
            articulation_id: 0,
        }
    }

    fn corpus() -> BTreeMap<String, Vec<PoseFrame>> {
        let mut map = BTreeMap::new();
        map.insert("vid".to_string(), video(&(0..100).collect::<Vec<_>>(), 2));
        map
    }

    #[test]
    fn inclusive_range_yields_eleven_frames_from_ten_to_twenty() {
        let samples = segment_samples(&[annotation("all", "vid", 10, 20)], &corpus()).unwrap();
        assert_eq!(samples.len(), 1);
        assert_eq!(samples[0].num_frames(), 11);
        assert_eq!(samples[0].sample_id, "vid:10-20");
        assert_eq!(samples[0].frames[0][0][0], 10.0);
        assert_eq!(samples[0].frames[10][0][0], 20.0);
    }

    #[test]
    fn each_annotation_becomes_its_own_sample() {
        let samples = segment_samples(
            &[annotation("a", "vid", 0, 4), annotation("b", "vid", 3, 9)],
            &corpus(),
        )
        .unwrap();
        assert_eq!(samples.len(), 2);
        assert_eq!(samples[0].num_frames(), 5);
        assert_eq!(samples[1].num_frames(), 7);
    }

    #[test]
    fn range_outside_the_video_is_rejected() {
        assert!(matches!(
            segment_samples(&[annotation("a", "vid", 90, 120)], &corpus()),
            Err(PipelineError::RangeOutsideVideo {
                end: 120,
                max: 99,
                ..
            })
        ));
    }

    #[test]
    fn unknown_video_is_rejected() {
        assert!(matches!(
            segment_samples(&[annotation("a", "ghost", 0, 1)], &corpus()),
            Err(PipelineError::UnknownVideo { .. })
        ));
    }

    #[test]
    fn gap_inside_the_range_is_reported_as_the_missing_frame() {
        let mut map = BTreeMap::new();
        map.insert("vid".to_string(), video(&[0, 1, 2, 5, 6], 1));
        assert!(matches!(
            segment_samples(&[annotation("a", "vid", 0, 6)], &map),
            Err(PipelineError::MissingFrame { frame: 3, .. })
        ));
    }

    #[test]
    fn duplicate_ranges_are_rejected() {
        assert!(matches!(
            segment_samples(
                &[annotation("a", "vid", 1, 2), annotation("b", "vid", 1, 2)],
                &corpus()
            ),
            Err(PipelineError::DuplicateSampleId { .. })
        ));
    }

    #[test]
    fn nonzero_based_videos_segment_by_frame_index() {
        let mut map = BTreeMap::new();
        map.insert("vid".to_string(), video(&[100, 101, 102, 103], 1));
        let samples = segment_samples(&[annotation("a", "vid", 101, 102)], &map).unwrap();
        assert_eq!(samples[0].num_frames(), 2);
        assert_eq!(samples[0].frames[0][0][0], 101.0);
    }
}
