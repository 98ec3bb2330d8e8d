//! Dataset preparation for skeleton-based sign recognition.
//!
//! The pipeline turns per-frame pose keypoints plus an annotation table
//! into packed train/test bundles: annotated frame ranges are cut into
//! samples, keypoints are filtered down to the joints the layout uses,
//! samples are split deterministically, normalized to a fixed frame
//! count, and serialized with a checksum. Each stage is available on its
//! own, and [`run_all`] chains them from a single corpus manifest.

mod annotations;
mod articulation;
mod bundle;
mod crc32;
mod error;
mod filter;
mod manifest;
mod normalize;
mod pose;
mod sample;
mod segment;
mod split;

pub use annotations::{parse_annotations, SignAnnotation};
pub use articulation::select_dominant_articulation;
pub use bundle::{
    build_label_map, deserialize, pack, read_bundle_file, serialize, write_bundle_file,
    BundleDescriptor, BundleSample, DatasetBundle, Provenance, SplitTag, BUNDLE_CHANNELS,
    BUNDLE_MAGIC, BUNDLE_VERSION,
};
pub use crc32::{crc32, Crc32};
pub use error::PipelineError;
pub use filter::{filter_all, filter_keypoints, KeypointFilter};
pub use manifest::{run_all, CorpusManifest, RunReport};
pub use normalize::{normalize_all, normalize_length, DEFAULT_TARGET_FRAMES};
pub use pose::{parse_corpus, parse_video, PoseFrame};
pub use sample::{read_samples, read_samples_file, write_samples, write_samples_file, RawSample};
pub use segment::segment_samples;
pub use split::{split_dataset, split_indices};
