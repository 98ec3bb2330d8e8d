//! Human-readable summaries of the binary file formats.
//!
//! The output is deterministic for a given file, so it doubles as a
//! cheap regression check: byte-identical files summarize identically.

use std::fmt::Write as _;
use std::path::Path;

use stgcn_autodiff::{read_checkpoint_file, CHECKPOINT_MAGIC};
use stgcn_pipeline::{read_bundle_file, DatasetBundle, BUNDLE_MAGIC};

use crate::error::HarnessError;

fn bundle_summary(path: &Path, bundle: &DatasetBundle) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "file: {}", path.display());
    let _ = writeln!(out, "kind: dataset bundle");
    let _ = writeln!(out, "split: {}", bundle.split.as_str());
    let layout = &bundle.descriptor.layout;
    let _ = writeln!(
        out,
        "layout: {} ({} nodes, {} edges, center {})",
        layout.name,
        layout.num_nodes,
        layout.edges.len(),
        layout.center
    );
    let _ = writeln!(out, "classes: {}", bundle.label_map.len());
    let _ = writeln!(out, "samples: {}", bundle.samples.len());
    match bundle.shape() {
        Some((t, v, c)) => {
            let _ = writeln!(out, "shape: {t} frames x {v} joints x {c} channels");
        }
        None => {
            let _ = writeln!(out, "shape: none (empty bundle)");
        }
    }
    let _ = writeln!(out, "labels:");
    for (gloss, count) in bundle.label_map.iter().zip(bundle.label_histogram()) {
        let _ = writeln!(out, "  {gloss}: {count}");
    }
    let provenance = &bundle.descriptor.provenance;
    if let Some(p) = provenance {
        let _ = writeln!(out, "provenance:");
        if let Some(seed) = p.seed {
            let _ = writeln!(out, "  seed: {seed}");
        }
        if let Some(ratio) = p.train_ratio {
            let _ = writeln!(out, "  train ratio: {ratio}");
        }
        if let Some(count) = p.filter_source_count {
            let _ = writeln!(out, "  filter source keypoints: {count}");
        }
        if let Some(indices) = &p.filter_indices {
            let _ = writeln!(out, "  filter output keypoints: {}", indices.len());
        }
        if let Some(frames) = p.target_frames {
            let _ = writeln!(out, "  target frames: {frames}");
        }
    }
    out
}

fn checkpoint_summary(path: &Path, params: &[(String, stgcn_autodiff::Tensor)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "file: {}", path.display());
    let _ = writeln!(out, "kind: model checkpoint");
    let _ = writeln!(out, "parameters: {}", params.len());
    let total: usize = params.iter().map(|(_, t)| t.numel()).sum();
    let _ = writeln!(out, "values: {total}");
    for (name, tensor) in params {
        let dims: Vec<String> = tensor.shape().iter().map(|d| d.to_string()).collect();
        let _ = writeln!(out, "  {name}: [{}]", dims.join(", "));
    }
    out
}

/// Summarizes a dataset bundle or a checkpoint, telling them apart by
/// their magic bytes.
pub fn inspect_file(path: &Path) -> Result<String, HarnessError> {
    let mut magic = [0u8; 4];
    {
        use std::io::Read;
        let mut file = std::fs::File::open(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        file.read_exact(&mut magic)
            .map_err(|_| HarnessError::UnknownFileKind {
                path: path.to_path_buf(),
            })?;
    }
    if magic == BUNDLE_MAGIC {
        let bundle = read_bundle_file(path)?;
        Ok(bundle_summary(path, &bundle))
    } else if magic == CHECKPOINT_MAGIC {
        let params = read_checkpoint_file(path)?;
        Ok(checkpoint_summary(path, &params))
    } else {
        Err(HarnessError::UnknownFileKind {
            path: path.to_path_buf(),
        })
    }
}
