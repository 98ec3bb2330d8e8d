//! The packed dataset format.
//!
//! A bundle file starts with the magic `STGS`, a little-endian `u16`
//! version, and a `u16` flags word carrying the split tag. Two
//! length-prefixed text sections follow: a JSON descriptor (the graph
//! layout the joints refer to, plus optional preparation provenance) and
//! a JSON label map (gloss strings indexed by label id). After a `u32`
//! sample count, each sample stores its label id (`u32`), a
//! length-prefixed sample id, `u16` frame, joint, and channel counts, and
//! the frame-major `f32` payload. A CRC-32 of every preceding byte closes
//! the file.

use std::path::Path;

use serde::{Deserialize, Serialize};
use stgcn_graph::LayoutSpec;

use crate::crc32::Crc32;
use crate::error::PipelineError;
use crate::sample::RawSample;

pub const BUNDLE_MAGIC: [u8; 4] = *b"STGS";
pub const BUNDLE_VERSION: u16 = 1;
/// Channels per joint in packed samples: x, y, confidence.
pub const BUNDLE_CHANNELS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitTag {
    Train,
    Test,
}

impl SplitTag {
    fn to_flags(self) -> u16 {
        match self {
            SplitTag::Train => 0,
            SplitTag::Test => 1,
        }
    }

    fn from_flags(flags: u16) -> Result<Self, PipelineError> {
        match flags {
            0 => Ok(SplitTag::Train),
            1 => Ok(SplitTag::Test),
            other => Err(PipelineError::UnknownFlags(other)),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SplitTag::Train => "train",
            SplitTag::Test => "test",
        }
    }
}

/// How the bundle was prepared; informational, not load-bearing.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter_source_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter_indices: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_frames: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleDescriptor {
    pub layout: LayoutSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

/// One packed sample: frame-major `[t][v][c]` values.
#[derive(Clone, Debug, PartialEq)]
pub struct BundleSample {
    pub label_id: u32,
    pub sample_id: String,
    pub frames: usize,
    pub joints: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl BundleSample {
    pub fn value(&self, t: usize, v: usize, c: usize) -> f32 {
        self.data[(t * self.joints + v) * self.channels + c]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetBundle {
    pub descriptor: BundleDescriptor,
    pub split: SplitTag,
    pub label_map: Vec<String>,
    pub samples: Vec<BundleSample>,
}

impl DatasetBundle {
    /// Shared shape of all samples as `(frames, joints, channels)`, if
    /// any samples exist.
    pub fn shape(&self) -> Option<(usize, usize, usize)> {
        self.samples
            .first()
            .map(|s| (s.frames, s.joints, s.channels))
    }

    pub fn num_classes(&self) -> usize {
        self.label_map.len()
    }

    /// Sample count per label id.
    pub fn label_histogram(&self) -> Vec<usize> {
        let mut histogram = vec![0; self.label_map.len()];
        for sample in &self.samples {
            histogram[sample.label_id as usize] += 1;
        }
        histogram
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let shape = self.shape();
        for sample in &self.samples {
            let (t, v, c) = shape.expect("samples exist when iterating them");
            if (sample.frames, sample.joints, sample.channels) != (t, v, c) {
                return Err(PipelineError::InconsistentSampleShape {
                    id: sample.sample_id.clone(),
                    got_t: sample.frames,
                    got_v: sample.joints,
                    got_c: sample.channels,
                    t,
                    v,
                    c,
                });
            }
            if sample.joints != self.descriptor.layout.num_nodes {
                return Err(PipelineError::LayoutJointMismatch {
                    id: sample.sample_id.clone(),
                    got: sample.joints,
                    layout: self.descriptor.layout.name.clone(),
                    nodes: self.descriptor.layout.num_nodes,
                });
            }
            if sample.label_id as usize >= self.label_map.len() {
                return Err(PipelineError::LabelIdOutOfRange {
                    id: sample.sample_id.clone(),
                    label_id: sample.label_id,
                    classes: self.label_map.len(),
                });
            }
            if sample.data.len() != sample.frames * sample.joints * sample.channels {
                return Err(PipelineError::InconsistentSampleShape {
                    id: sample.sample_id.clone(),
                    got_t: sample.frames,
                    got_v: sample.joints,
                    got_c: sample.channels,
                    t,
                    v,
                    c,
                });
            }
            if sample.data.iter().any(|x| !x.is_finite()) {
                return Err(PipelineError::NonFiniteSample {
                    id: sample.sample_id.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Gloss strings in sorted order; position becomes the label id. Build
/// the map over the union of all splits so they agree on ids.
pub fn build_label_map<'a>(samples: impl IntoIterator<Item = &'a RawSample>) -> Vec<String> {
    let glosses: std::collections::BTreeSet<&str> =
        samples.into_iter().map(|s| s.label.as_str()).collect();
    glosses.into_iter().map(str::to_string).collect()
}

/// Packs prepared samples against a shared label map and layout.
pub fn pack(
    samples: &[RawSample],
    label_map: &[String],
    layout: &LayoutSpec,
    split: SplitTag,
    provenance: Option<Provenance>,
) -> Result<DatasetBundle, PipelineError> {
    let ids: std::collections::BTreeMap<&str, u32> = label_map
        .iter()
        .enumerate()
        .map(|(i, gloss)| (gloss.as_str(), i as u32))
        .collect();
    if ids.len() != label_map.len() {
        return Err(PipelineError::SparseLabelMap {
            got: label_map.len(),
            expected: ids.len(),
        });
    }
    let mut packed = Vec::with_capacity(samples.len());
    for sample in samples {
        sample.validate()?;
        let label_id =
            *ids.get(sample.label.as_str())
                .ok_or_else(|| PipelineError::LabelNotInMap {
                    label: sample.label.clone(),
                })?;
        let mut data = Vec::with_capacity(sample.frames.len() * sample.num_keypoints() * 3);
        for frame in &sample.frames {
            for point in frame {
                for &value in point {
                    let cast = value as f32;
                    if !cast.is_finite() {
                        return Err(PipelineError::NonFiniteSample {
                            id: sample.sample_id.clone(),
                        });
                    }
                    data.push(cast);
                }
            }
        }
        packed.push(BundleSample {
            label_id,
            sample_id: sample.sample_id.clone(),
            frames: sample.frames.len(),
            joints: sample.num_keypoints(),
            channels: BUNDLE_CHANNELS,
            data,
        });
    }
    let bundle = DatasetBundle {
        descriptor: BundleDescriptor {
            layout: layout.clone(),
            provenance,
        },
        split,
        label_map: label_map.to_vec(),
        samples: packed,
    };
    bundle.validate()?;
    Ok(bundle)
}

struct Writer {
    bytes: Vec<u8>,
    crc: Crc32,
}

impl Writer {
    fn new() -> Self {
        Writer {
            bytes: Vec::new(),
            crc: Crc32::new(),
        }
    }

    fn put(&mut self, chunk: &[u8]) {
        self.crc.update(chunk);
        self.bytes.extend_from_slice(chunk);
    }

    fn put_u16(&mut self, value: u16) {
        self.put(&value.to_le_bytes());
    }

    fn put_u32(&mut self, value: u32) {
        self.put(&value.to_le_bytes());
    }

    fn put_block(&mut self, what: &'static str, block: &[u8]) -> Result<(), PipelineError> {
        let len = u32::try_from(block.len()).map_err(|_| PipelineError::Oversized {
            what,
            len: block.len(),
        })?;
        self.put_u32(len);
        self.put(block);
        Ok(())
    }
}

fn dim_u16(what: &'static str, value: usize) -> Result<u16, PipelineError> {
    u16::try_from(value).map_err(|_| PipelineError::Oversized { what, len: value })
}

/// Serializes a validated bundle; the same bundle always produces the
/// same bytes.
pub fn serialize(bundle: &DatasetBundle) -> Result<Vec<u8>, PipelineError> {
    bundle.validate()?;
    let mut w = Writer::new();
    w.put(&BUNDLE_MAGIC);
    w.put_u16(BUNDLE_VERSION);
    w.put_u16(bundle.split.to_flags());
    let descriptor =
        serde_json::to_vec(&bundle.descriptor).map_err(PipelineError::MalformedDescriptor)?;
    w.put_block("layout descriptor", &descriptor)?;
    let label_map =
        serde_json::to_vec(&bundle.label_map).map_err(PipelineError::MalformedLabelMap)?;
    w.put_block("label map", &label_map)?;
    let count = u32::try_from(bundle.samples.len()).map_err(|_| PipelineError::Oversized {
        what: "sample count",
        len: bundle.samples.len(),
    })?;
    w.put_u32(count);
    for sample in &bundle.samples {
        w.put_u32(sample.label_id);
        w.put_block("sample id", sample.sample_id.as_bytes())?;
        w.put_u16(dim_u16("frame count", sample.frames)?);
        w.put_u16(dim_u16("joint count", sample.joints)?);
        w.put_u16(dim_u16("channel count", sample.channels)?);
        for &value in &sample.data {
            w.put(&value.to_le_bytes());
        }
    }
    let crc = w.crc.finish();
    w.bytes.extend_from_slice(&crc.to_le_bytes());
    Ok(w.bytes)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], PipelineError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or(PipelineError::Truncated(what))?;
        let chunk = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(chunk)
    }

    fn u16(&mut self, what: &'static str) -> Result<u16, PipelineError> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, PipelineError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn block(&mut self, what: &'static str) -> Result<&'a [u8], PipelineError> {
        let len = self.u32(what)? as usize;
        self.take(len, what)
    }

    fn string(&mut self, what: &'static str) -> Result<String, PipelineError> {
        let bytes = self.block(what)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| PipelineError::BadString)
    }
}

/// Parses and validates a serialized bundle. The magic and version are
/// inspected first so foreign files get a clear diagnostic, then the
/// trailing CRC-32 is verified before any structure is trusted.
pub fn deserialize(bytes: &[u8]) -> Result<DatasetBundle, PipelineError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != BUNDLE_MAGIC {
        return Err(PipelineError::BadMagic);
    }
    let version = r.u16("version")?;
    if version != BUNDLE_VERSION {
        return Err(PipelineError::UnsupportedVersion(version));
    }
    if bytes.len() < 12 {
        return Err(PipelineError::Truncated("checksum"));
    }
    let body_end = bytes.len() - 4;
    let stored = u32::from_le_bytes(bytes[body_end..].try_into().unwrap());
    let computed = crate::crc32::crc32(&bytes[..body_end]);
    if stored != computed {
        return Err(PipelineError::ChecksumMismatch { stored, computed });
    }
    let mut r = Reader {
        bytes: &bytes[..body_end],
        pos: 6,
    };
    let split = SplitTag::from_flags(r.u16("flags")?)?;
    let descriptor: BundleDescriptor = serde_json::from_slice(r.block("layout descriptor")?)
        .map_err(PipelineError::MalformedDescriptor)?;
    let label_map: Vec<String> =
        serde_json::from_slice(r.block("label map")?).map_err(PipelineError::MalformedLabelMap)?;
    let count = r.u32("sample count")? as usize;
    let mut samples = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let label_id = r.u32("sample label")?;
        let sample_id = r.string("sample id")?;
        let frames = r.u16("frame count")? as usize;
        let joints = r.u16("joint count")? as usize;
        let channels = r.u16("channel count")? as usize;
        let payload = r.take(4 * frames * joints * channels, "sample payload")?;
        let data = payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        samples.push(BundleSample {
            label_id,
            sample_id,
            frames,
            joints,
            channels,
            data,
        });
    }
    if r.pos != body_end {
        return Err(PipelineError::TrailingBytes(body_end - r.pos));
    }
    let bundle = DatasetBundle {
        descriptor,
        split,
        label_map,
        samples,
    };
    bundle.validate()?;
    Ok(bundle)
}

pub fn write_bundle_file(path: &Path, bundle: &DatasetBundle) -> Result<(), PipelineError> {
    let bytes = serialize(bundle)?;
    std::fs::write(path, bytes).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_bundle_file(path: &Path) -> Result<DatasetBundle, PipelineError> {
    let bytes = std::fs::read(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    deserialize(&bytes)
}
