use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed pose document {path}: {source}")]
    MalformedPose {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("pose document {path} declares {got} keypoints, corpus manifest declares {expected}")]
    KeypointCountMismatch {
        path: PathBuf,
        got: usize,
        expected: usize,
    },
    #[error(
        "keypoint array length {len} in pose document {path}, frame {frame} is not a multiple of 3"
    )]
    OddKeypointArray {
        path: PathBuf,
        frame: i64,
        len: usize,
    },
    #[error("non-finite coordinate in pose document {path}, frame {frame}")]
    NonFiniteKeypoint { path: PathBuf, frame: i64 },
    #[error("confidence {value} outside [0, 1] in pose document {path}, frame {frame}")]
    ConfidenceOutOfRange {
        path: PathBuf,
        frame: i64,
        value: f64,
    },
    #[error("duplicate frame index {frame} in video {video}")]
    DuplicateFrame { video: String, frame: i64 },
    #[error("video {video} has no frames")]
    EmptyVideo { video: String },
    #[error("annotation table {path}: {source}")]
    MalformedAnnotations {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("annotation row {row}: empty label")]
    EmptyLabel { row: usize },
    #[error("annotation row {row}: start frame {start} exceeds end frame {end}")]
    InvertedRange { row: usize, start: i64, end: i64 },
    #[error("annotation references unknown video {video}")]
    UnknownVideo { video: String },
    #[error(
        "annotation {label} on video {video} spans frames {start}-{end}, \
         outside the available range {min}-{max}"
    )]
    RangeOutsideVideo {
        video: String,
        label: String,
        start: i64,
        end: i64,
        min: i64,
        max: i64,
    },
    #[error("video {video} is missing frame {frame} inside an annotated range")]
    MissingFrame { video: String, frame: i64 },
    #[error("two annotations produce the same sample id {id}")]
    DuplicateSampleId { id: String },
    #[error("no samples produced")]
    NoSamples,
    #[error("keypoint filter: index {index} duplicated")]
    DuplicateFilterIndex { index: usize },
    #[error("keypoint filter: index {index} out of range for {source_count} source points")]
    FilterIndexOutOfRange { index: usize, source_count: usize },
    #[error("keypoint filter selects no points")]
    EmptyFilter,
    #[error("sample {id} has {got} keypoints per frame, filter expects {expected}")]
    FilterSourceMismatch {
        id: String,
        got: usize,
        expected: usize,
    },
    #[error("filter selects {filter} points but layout {layout} has {nodes} nodes")]
    FilterLayoutMismatch {
        filter: usize,
        layout: String,
        nodes: usize,
    },
    #[error("unknown builtin filter {0}")]
    UnknownBuiltinFilter(String),
    #[error("malformed filter file: {0}")]
    MalformedFilter(#[source] serde_json::Error),
    #[error("train ratio {0} must lie strictly between 0 and 1")]
    BadTrainRatio(f64),
    #[error("splitting {total} samples at ratio {ratio} leaves the {side} side empty")]
    DegenerateSplit {
        total: usize,
        ratio: f64,
        side: &'static str,
    },
    #[error("target frame count must be at least 1")]
    ZeroTargetFrames,
    #[error("sample {id} has no frames")]
    EmptySample { id: String },
    #[error("malformed sample record at line {line}: {source}")]
    MalformedSample {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("sample {id}: frame {frame} has {got} keypoints, expected {expected}")]
    RaggedSample {
        id: String,
        frame: usize,
        got: usize,
        expected: usize,
    },
    #[error("label {label} missing from the label map")]
    LabelNotInMap { label: String },
    #[error("label map ids must be dense, got {got} entries for {expected} distinct glosses")]
    SparseLabelMap { got: usize, expected: usize },
    #[error(
        "bundle samples disagree on shape: {id} is {got_t}x{got_v}x{got_c}, expected {t}x{v}x{c}"
    )]
    InconsistentSampleShape {
        id: String,
        got_t: usize,
        got_v: usize,
        got_c: usize,
        t: usize,
        v: usize,
        c: usize,
    },
    #[error("sample {id} has {got} joints but layout {layout} has {nodes} nodes")]
    LayoutJointMismatch {
        id: String,
        got: usize,
        layout: String,
        nodes: usize,
    },
    #[error("sample {id} label id {label_id} exceeds label map size {classes}")]
    LabelIdOutOfRange {
        id: String,
        label_id: u32,
        classes: usize,
    },
    #[error("non-finite value in sample {id}")]
    NonFiniteSample { id: String },
    #[error("bad magic: expected STGS")]
    BadMagic,
    #[error("unsupported bundle version {0}")]
    UnsupportedVersion(u16),
    #[error("unknown split flags {0:#06x}")]
    UnknownFlags(u16),
    #[error("truncated bundle while reading {0}")]
    Truncated(&'static str),
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("{0} bytes after the checksum")]
    TrailingBytes(usize),
    #[error("malformed bundle descriptor: {0}")]
    MalformedDescriptor(#[source] serde_json::Error),
    #[error("malformed label map: {0}")]
    MalformedLabelMap(#[source] serde_json::Error),
    #[error("string field is not valid UTF-8")]
    BadString,
    #[error("oversized field: {what} of {len} does not fit the format")]
    Oversized { what: &'static str, len: usize },
    #[error("malformed manifest {path}: {source}")]
    MalformedManifest {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("manifest poses directory {0} contains no videos")]
    NoVideos(PathBuf),
    #[error("layout: {0}")]
    Layout(#[from] stgcn_graph::GraphError),
    #[error("stage count mismatch after {stage}: {got} samples, expected {expected}")]
    CountMismatch {
        stage: &'static str,
        got: usize,
        expected: usize,
    },
}
