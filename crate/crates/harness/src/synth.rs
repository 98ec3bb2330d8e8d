//! Class-conditioned synthetic skeleton data for desk-scale runs.
//!
//! Each class oscillates the joints of a fixed base pose at its own
//! frequency and phase. Every third joint swings with a large amplitude,
//! the rest barely move, so class identity lives in trajectories the
//! network can only reach by combining spatial and temporal context.
//! Gaussian noise keeps samples within a class distinct.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use stgcn_graph::{GraphLayout, LayoutSpec};
use stgcn_pipeline::{pack, DatasetBundle, Provenance, RawSample, SplitTag};

use crate::error::HarnessError;

#[derive(Clone, Debug)]
pub struct SynthSpec {
    pub classes: usize,
    pub train_per_class: usize,
    /// May be zero for a train-only dataset; the test bundle is then
    /// empty.
    pub test_per_class: usize,
    pub frames: usize,
    pub joints: usize,
    pub seed: u64,
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal draw via the Box-Muller transform.
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = loop {
        let u = uniform(rng);
        if u > 0.0 {
            break u;
        }
    };
    let u2 = uniform(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn layout_for(joints: usize) -> Result<LayoutSpec, HarnessError> {
    let layout = if joints == 27 {
        GraphLayout::builtin("sign-27").map_err(stgcn_pipeline::PipelineError::from)?
    } else {
        GraphLayout::path(joints).map_err(stgcn_pipeline::PipelineError::from)?
    };
    Ok(layout.to_spec())
}

fn sample_frames(spec: &SynthSpec, class: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<[f64; 3]>> {
    let v = spec.joints;
    let frequency = 1.0 + 2.0 * class as f64;
    let class_phase = std::f64::consts::TAU * class as f64 / spec.classes as f64;
    let jitter = uniform(rng) * 0.2;
    (0..spec.frames)
        .map(|t| {
            let progress = t as f64 / spec.frames as f64;
            let swing = std::f64::consts::TAU * frequency * progress + class_phase + jitter;
            (0..v)
                .map(|j| {
                    let base_angle = std::f64::consts::TAU * j as f64 / v as f64;
                    let amplitude = if j % 3 == 0 { 0.5 } else { 0.05 };
                    let joint_phase = 0.7 * j as f64;
                    let x = base_angle.cos()
                        + amplitude * (swing + joint_phase).cos()
                        + 0.02 * gaussian(rng);
                    let y = base_angle.sin()
                        + amplitude * (swing + joint_phase).sin()
                        + 0.02 * gaussian(rng);
                    let confidence = 0.9 + 0.1 * uniform(rng);
                    [x, y, confidence]
                })
                .collect()
        })
        .collect()
}

/// Generates a train/test bundle pair, deterministic in the spec.
pub fn generate_synthetic(
    spec: &SynthSpec,
) -> Result<(DatasetBundle, DatasetBundle), HarnessError> {
    if spec.classes < 2 {
        return Err(HarnessError::TooFewSynthClasses(spec.classes));
    }
    if spec.train_per_class == 0 {
        return Err(HarnessError::NoTrainSamples);
    }
    if spec.frames == 0 || spec.joints == 0 {
        return Err(HarnessError::EmptySynthShape);
    }
    let layout = layout_for(spec.joints)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut train = Vec::with_capacity(spec.classes * spec.train_per_class);
    let mut test = Vec::with_capacity(spec.classes * spec.test_per_class);
    for class in 0..spec.classes {
        let label = format!("class-{class:04}");
        for i in 0..spec.train_per_class {
            train.push(RawSample {
                sample_id: format!("synth-{class:04}-{i:03}"),
                label: label.clone(),
                signer_id: "synthetic".to_string(),
                articulation_id: 0,
                frames: sample_frames(spec, class, &mut rng),
            });
        }
        for i in 0..spec.test_per_class {
            test.push(RawSample {
                sample_id: format!("synth-test-{class:04}-{i:03}"),
                label: label.clone(),
                signer_id: "synthetic".to_string(),
                articulation_id: 0,
                frames: sample_frames(spec, class, &mut rng),
            });
        }
    }
    let label_map: Vec<String> = (0..spec.classes).map(|c| format!("class-{c:04}")).collect();
    let provenance = Provenance {
        seed: Some(spec.seed),
        target_frames: Some(spec.frames),
        ..Provenance::default()
    };
    let train_bundle = pack(
        &train,
        &label_map,
        &layout,
        SplitTag::Train,
        Some(provenance.clone()),
    )?;
    let test_bundle = pack(&test, &label_map, &layout, SplitTag::Test, Some(provenance))?;
    Ok((train_bundle, test_bundle))
}
