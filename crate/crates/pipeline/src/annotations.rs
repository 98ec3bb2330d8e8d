//! Sign annotation tables: one row per annotated sign articulation.
//!
//! The table is delimiter-separated text with the header
//! `label,video_id,start_frame,end_frame,signer_id,articulation_id`.
//! Frame numbers refer to the `frame` field of the pose documents and the
//! range is inclusive on both ends.

use std::path::Path;

use serde::Deserialize;

use crate::error::PipelineError;

#[derive(Clone, Debug, Deserialize, PartialEq)]
pub struct SignAnnotation {
    pub label: String,
    pub video_id: String,
    pub start_frame: i64,
    pub end_frame: i64,
    pub signer_id: String,
    pub articulation_id: u32,
}

/// Reads and validates an annotation table.
pub fn parse_annotations(path: &Path) -> Result<Vec<SignAnnotation>, PipelineError> {
    let mut reader =
        csv::Reader::from_path(path).map_err(|source| PipelineError::MalformedAnnotations {
            path: path.to_path_buf(),
            source,
        })?;
    let mut rows = Vec::new();
    for (row, record) in reader.deserialize::<SignAnnotation>().enumerate() {
        let annotation = record.map_err(|source| PipelineError::MalformedAnnotations {
            path: path.to_path_buf(),
            source,
        })?;
        if annotation.label.is_empty() {
            return Err(PipelineError::EmptyLabel { row });
        }
        if annotation.start_frame > annotation.end_frame {
            return Err(PipelineError::InvertedRange {
                row,
                start: annotation.start_frame,
                end: annotation.end_frame,
            });
        }
        rows.push(annotation);
    }
    Ok(rows)
}
