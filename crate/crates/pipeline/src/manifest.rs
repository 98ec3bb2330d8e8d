//! One-file description of a corpus and how to prepare it.
//!
//! A manifest is JSON naming the pose corpus root, the annotation table,
//! the keypoint filter, the target layout, and the preparation
//! parameters. Relative paths resolve against the manifest's own
//! directory, so a corpus can move as a unit. `run_all` executes the
//! whole preparation: segment, filter, split, normalize, pack.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stgcn_graph::GraphLayout;

use crate::articulation::select_dominant_articulation;
use crate::bundle::{
    build_label_map, pack, write_bundle_file, DatasetBundle, Provenance, SplitTag,
};
use crate::error::PipelineError;
use crate::filter::{filter_all, KeypointFilter};
use crate::normalize::{normalize_all, DEFAULT_TARGET_FRAMES};
use crate::pose::parse_corpus;
use crate::segment::segment_samples;
use crate::split::split_dataset;
use crate::{annotations, sample::RawSample};

fn default_target_frames() -> usize {
    DEFAULT_TARGET_FRAMES
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorpusManifest {
    /// Keypoints every pose frame must carry.
    pub keypoint_count: usize,
    /// Directory with one video per entry.
    pub poses: PathBuf,
    /// Annotation table path.
    pub annotations: PathBuf,
    /// Keypoint filter: builtin name or file path.
    pub filter: String,
    /// Target layout: builtin name or layout file path.
    pub layout: String,
    pub train_ratio: f64,
    pub seed: u64,
    #[serde(default = "default_target_frames")]
    pub target_frames: usize,
    /// Keep only the best-attested articulation of each gloss before
    /// splitting.
    #[serde(default)]
    pub dominant_articulation_only: bool,
}

impl CorpusManifest {
    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut manifest: CorpusManifest =
            serde_json::from_str(&text).map_err(|source| PipelineError::MalformedManifest {
                path: path.to_path_buf(),
                source,
            })?;
        let base = path.parent().unwrap_or(Path::new("."));
        manifest.poses = base.join(&manifest.poses);
        manifest.annotations = base.join(&manifest.annotations);
        if Path::new(&manifest.filter).is_relative()
            && !KeypointFilter::builtin_names().contains(&manifest.filter.as_str())
        {
            manifest.filter = base.join(&manifest.filter).to_string_lossy().into_owned();
        }
        if Path::new(&manifest.layout).is_relative()
            && !GraphLayout::builtin_names().contains(&manifest.layout.as_str())
        {
            manifest.layout = base.join(&manifest.layout).to_string_lossy().into_owned();
        }
        Ok(manifest)
    }
}

/// Per-stage sample counts from a full preparation run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub videos: usize,
    pub annotations: usize,
    pub segmented: usize,
    pub after_articulation_selection: usize,
    pub filtered: usize,
    pub train_samples: usize,
    pub test_samples: usize,
    pub classes: usize,
    pub train_path: PathBuf,
    pub test_path: PathBuf,
}

fn expect_count(stage: &'static str, got: usize, expected: usize) -> Result<(), PipelineError> {
    if got != expected {
        return Err(PipelineError::CountMismatch {
            stage,
            got,
            expected,
        });
    }
    log::info!("{stage}: {got} samples");
    Ok(())
}

/// Runs the whole preparation and writes `train.stgs` and `test.stgs`
/// into `out_dir`.
pub fn run_all(manifest: &CorpusManifest, out_dir: &Path) -> Result<RunReport, PipelineError> {
    let videos = parse_corpus(&manifest.poses, manifest.keypoint_count)?;
    let table = annotations::parse_annotations(&manifest.annotations)?;
    let filter = KeypointFilter::resolve(&manifest.filter)?;
    let layout = GraphLayout::resolve(&manifest.layout)?;
    if filter.output_count() != layout.num_nodes() {
        return Err(PipelineError::FilterLayoutMismatch {
            filter: filter.output_count(),
            layout: layout.name().to_string(),
            nodes: layout.num_nodes(),
        });
    }

    let segmented = segment_samples(&table, &videos)?;
    expect_count("segment", segmented.len(), table.len())?;

    let selected: Vec<RawSample> = if manifest.dominant_articulation_only {
        let kept = select_dominant_articulation(&segmented);
        log::info!(
            "articulation selection: {} of {} samples kept",
            kept.len(),
            segmented.len()
        );
        kept
    } else {
        segmented
    };
    let after_articulation = selected.len();

    let filtered = filter_all(&selected, &filter)?;
    expect_count("filter", filtered.len(), after_articulation)?;

    let (train_raw, test_raw) = split_dataset(filtered, manifest.train_ratio, manifest.seed)?;
    log::info!(
        "split: {} train / {} test at ratio {}",
        train_raw.len(),
        test_raw.len(),
        manifest.train_ratio
    );
    let (train_count, test_count) = (train_raw.len(), test_raw.len());

    let train_norm = normalize_all(&train_raw, manifest.target_frames)?;
    let test_norm = normalize_all(&test_raw, manifest.target_frames)?;
    expect_count(
        "normalize",
        train_norm.len() + test_norm.len(),
        train_count + test_count,
    )?;

    let label_map = build_label_map(train_norm.iter().chain(&test_norm));
    let provenance = Provenance {
        seed: Some(manifest.seed),
        train_ratio: Some(manifest.train_ratio),
        filter_source_count: Some(filter.source_count),
        filter_indices: Some(filter.indices.clone()),
        target_frames: Some(manifest.target_frames),
    };
    let layout_spec = layout.to_spec();
    let pack_split = |samples: &[RawSample], split| -> Result<DatasetBundle, PipelineError> {
        pack(
            samples,
            &label_map,
            &layout_spec,
            split,
            Some(provenance.clone()),
        )
    };
    let train_bundle = pack_split(&train_norm, SplitTag::Train)?;
    let test_bundle = pack_split(&test_norm, SplitTag::Test)?;

    std::fs::create_dir_all(out_dir).map_err(|source| PipelineError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let train_path = out_dir.join("train.stgs");
    let test_path = out_dir.join("test.stgs");
    write_bundle_file(&train_path, &train_bundle)?;
    write_bundle_file(&test_path, &test_bundle)?;
    log::info!(
        "packed {} train and {} test samples over {} classes",
        train_bundle.samples.len(),
        test_bundle.samples.len(),
        label_map.len()
    );

    Ok(RunReport {
        videos: videos.len(),
        annotations: table.len(),
        segmented: table.len(),
        after_articulation_selection: after_articulation,
        filtered: after_articulation,
        train_samples: train_count,
        test_samples: test_count,
        classes: label_map.len(),
        train_path,
        test_path,
    })
}
