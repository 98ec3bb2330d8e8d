//! Feeding packed bundles into the model.

use std::path::Path;

use stgcn_autodiff::Tensor;
use stgcn_model::{ModelConfig, SampleBatch, INPUT_CHANNELS};
use stgcn_pipeline::DatasetBundle;

use crate::error::HarnessError;

/// Builds a `[n, c, t, v]` batch from the chosen bundle samples, which
/// store their values frame-major as `[t][v][c]`.
pub fn batch_from_bundle(
    bundle: &DatasetBundle,
    indices: &[usize],
) -> Result<SampleBatch, HarnessError> {
    let (t, v, c) = bundle
        .shape()
        .expect("compatibility checks reject empty bundles");
    let n = indices.len();
    let mut data = vec![0.0f64; n * c * t * v];
    let mut labels = Vec::with_capacity(n);
    for (row, &index) in indices.iter().enumerate() {
        let sample = &bundle.samples[index];
        labels.push(sample.label_id as usize);
        for ti in 0..t {
            for vi in 0..v {
                for ci in 0..c {
                    data[((row * c + ci) * t + ti) * v + vi] = f64::from(sample.value(ti, vi, ci));
                }
            }
        }
    }
    let tensor = Tensor::new(vec![n, c, t, v], data).map_err(stgcn_model::ModelError::from)?;
    Ok(SampleBatch::new(tensor, labels)?)
}

/// Checks that a bundle can train or evaluate the given model: matching
/// layout name, joint count, channel count, and class count.
pub fn check_compatible(
    model: &ModelConfig,
    bundle: &DatasetBundle,
    path: &Path,
) -> Result<(), HarnessError> {
    if bundle.samples.is_empty() {
        return Err(HarnessError::EmptyBundle {
            path: path.to_path_buf(),
        });
    }
    if bundle.descriptor.layout.name != model.layout {
        return Err(HarnessError::LayoutMismatch {
            model: model.layout.clone(),
            bundle: bundle.descriptor.layout.name.clone(),
            path: path.to_path_buf(),
        });
    }
    if bundle.num_classes() != model.num_classes {
        return Err(HarnessError::ClassCountMismatch {
            model: model.num_classes,
            bundle: bundle.num_classes(),
            path: path.to_path_buf(),
        });
    }
    let (_, _, channels) = bundle.shape().expect("checked non-empty above");
    if channels != INPUT_CHANNELS {
        return Err(HarnessError::ChannelCountMismatch {
            got: channels,
            expected: INPUT_CHANNELS,
            path: path.to_path_buf(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use stgcn_graph::GraphLayout;
    use stgcn_pipeline::{pack, RawSample, SplitTag};

    fn bundle(joints: usize) -> DatasetBundle {
        let layout = GraphLayout::path(joints).unwrap().to_spec();
        let samples: Vec<RawSample> = (0..3)
            .map(|i| RawSample {
                sample_id: format!("v:{i}-{i}"),
                label: format!("gloss-{}", i % 2),
                signer_id: "s".to_string(),
                articulation_id: 0,
                frames: (0..4)
                    .map(|t| {
                        (0..joints)
                            .map(|v| [i as f64, t as f64, v as f64 / 10.0])
                            .collect()
                    })
                    .collect(),
            })
            .collect();
        let map = stgcn_pipeline::build_label_map(&samples);
        pack(&samples, &map, &layout, SplitTag::Train, None).unwrap()
    }

    #[test]
    fn batch_layout_transposes_frame_major_storage() {
        let b = bundle(5);
        let batch = batch_from_bundle(&b, &[2, 0]).unwrap();
        assert_eq!(batch.size(), 2);
        assert_eq!(batch.channels(), 3);
        assert_eq!(batch.frames(), 4);
        assert_eq!(batch.joints(), 5);
        assert_eq!(batch.labels(), &[0, 0]);
        let data = batch.data().data();
        let at = |n: usize, c: usize, t: usize, v: usize| data[((n * 3 + c) * 4 + t) * 5 + v];
        assert_eq!(at(0, 0, 0, 0), 2.0);
        assert_eq!(at(1, 0, 0, 0), 0.0);
        assert_eq!(at(0, 1, 3, 1), 3.0);
        assert!((at(0, 2, 1, 4) - f64::from(0.4f32)).abs() < 1e-12);
    }

    #[test]
    fn compatibility_checks_each_contract_in_turn() {
        let b = bundle(5);
        let path = Path::new("t.stgs");
        let mut config = stgcn_model::ModelConfig::baseline(2);
        config.layout = "path-5".to_string();
        check_compatible(&config, &b, path).unwrap();

        let mut wrong_layout = config.clone();
        wrong_layout.layout = "sign-27".to_string();
        assert!(matches!(
            check_compatible(&wrong_layout, &b, path),
            Err(HarnessError::LayoutMismatch { .. })
        ));

        let mut wrong_classes = config.clone();
        wrong_classes.num_classes = 7;
        assert!(matches!(
            check_compatible(&wrong_classes, &b, path),
            Err(HarnessError::ClassCountMismatch {
                model: 7,
                bundle: 2,
                ..
            })
        ));

        let mut empty = b.clone();
        empty.samples.clear();
        assert!(matches!(
            check_compatible(&config, &empty, path),
            Err(HarnessError::EmptyBundle { .. })
        ));
    }
}
