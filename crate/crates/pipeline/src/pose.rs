//! Parsing of per-frame pose keypoint documents.
//!
//! A frame document is JSON of the form
//! `{"frame": 12, "people": [{"keypoints": [x, y, c, x, y, c, ...]}]}`.
//! A video is either a directory of such documents (one file per frame,
//! file names carry no meaning) or a single file holding a JSON array of
//! them. The corpus manifest declares how many keypoints each frame must
//! carry.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::PipelineError;

/// One frame of estimated keypoints for the selected person, as
/// `[x, y, confidence]` triples.
#[derive(Clone, Debug, PartialEq)]
pub struct PoseFrame {
    pub frame_index: i64,
    pub keypoints: Vec<[f64; 3]>,
}

#[derive(Deserialize)]
struct PoseDoc {
    frame: i64,
    people: Vec<PersonDoc>,
}

#[derive(Deserialize)]
struct PersonDoc {
    keypoints: Vec<f64>,
}

fn read(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn frame_from_doc(
    doc: PoseDoc,
    path: &Path,
    keypoint_count: usize,
) -> Result<PoseFrame, PipelineError> {
    let person = match doc.people.len() {
        0 => {
            return Ok(PoseFrame {
                frame_index: doc.frame,
                keypoints: vec![[0.0, 0.0, 0.0]; keypoint_count],
            })
        }
        1 => &doc.people[0],
        n => {
            log::warn!(
                "{}: frame {} has {} people, keeping the first",
                path.display(),
                doc.frame,
                n
            );
            &doc.people[0]
        }
    };
    if person.keypoints.len() % 3 != 0 {
        return Err(PipelineError::OddKeypointArray {
            path: path.to_path_buf(),
            frame: doc.frame,
            len: person.keypoints.len(),
        });
    }
    if person.keypoints.len() != 3 * keypoint_count {
        return Err(PipelineError::KeypointCountMismatch {
            path: path.to_path_buf(),
            got: person.keypoints.len() / 3,
            expected: keypoint_count,
        });
    }
    let mut keypoints = Vec::with_capacity(keypoint_count);
    for triple in person.keypoints.chunks_exact(3) {
        let [x, y, c] = [triple[0], triple[1], triple[2]];
        if !(x.is_finite() && y.is_finite() && c.is_finite()) {
            return Err(PipelineError::NonFiniteKeypoint {
                path: path.to_path_buf(),
                frame: doc.frame,
            });
        }
        if !(0.0..=1.0).contains(&c) {
            return Err(PipelineError::ConfidenceOutOfRange {
                path: path.to_path_buf(),
                frame: doc.frame,
                value: c,
            });
        }
        keypoints.push([x, y, c]);
    }
    Ok(PoseFrame {
        frame_index: doc.frame,
        keypoints,
    })
}

fn finalize(video: &str, mut frames: Vec<PoseFrame>) -> Result<Vec<PoseFrame>, PipelineError> {
    if frames.is_empty() {
        return Err(PipelineError::EmptyVideo {
            video: video.to_string(),
        });
    }
    frames.sort_by_key(|f| f.frame_index);
    for pair in frames.windows(2) {
        if pair[0].frame_index == pair[1].frame_index {
            return Err(PipelineError::DuplicateFrame {
                video: video.to_string(),
                frame: pair[0].frame_index,
            });
        }
    }
    Ok(frames)
}

/// Parses one video's frames from a directory of frame documents or a
/// single array file, sorted by frame index.
pub fn parse_video(
    video: &str,
    path: &Path,
    keypoint_count: usize,
) -> Result<Vec<PoseFrame>, PipelineError> {
    let mut frames = Vec::new();
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|source| PipelineError::Io {
                path: path.to_path_buf(),
                source,
            })?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "json"))
            .collect();
        files.sort();
        for file in files {
            let text = read(&file)?;
            let doc: PoseDoc =
                serde_json::from_str(&text).map_err(|source| PipelineError::MalformedPose {
                    path: file.clone(),
                    source,
                })?;
            frames.push(frame_from_doc(doc, &file, keypoint_count)?);
        }
    } else {
        let text = read(path)?;
        let docs: Vec<PoseDoc> =
            serde_json::from_str(&text).map_err(|source| PipelineError::MalformedPose {
                path: path.to_path_buf(),
                source,
            })?;
        for doc in docs {
            frames.push(frame_from_doc(doc, path, keypoint_count)?);
        }
    }
    finalize(video, frames)
}

/// Parses every video under a corpus root. Each directory entry is one
/// video: a subdirectory of frame documents, or a `.json` array file whose
/// stem names the video.
pub fn parse_corpus(
    root: &Path,
    keypoint_count: usize,
) -> Result<BTreeMap<String, Vec<PoseFrame>>, PipelineError> {
    let mut videos = BTreeMap::new();
    let entries = std::fs::read_dir(root).map_err(|source| PipelineError::Io {
        path: root.to_path_buf(),
        source,
    })?;
    let mut paths: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
    paths.sort();
    for path in paths {
        let video = if path.is_dir() {
            path.file_name()
        } else if path.extension().is_some_and(|e| e == "json") {
            path.file_stem()
        } else {
            continue;
        };
        let Some(video) = video.and_then(|n| n.to_str()).map(str::to_string) else {
            continue;
        };
        let frames = parse_video(&video, &path, keypoint_count)?;
        log::info!("video {video}: {} frames", frames.len());
        videos.insert(video, frames);
    }
    if videos.is_empty() {
        return Err(PipelineError::NoVideos(root.to_path_buf()));
    }
    Ok(videos)
}
