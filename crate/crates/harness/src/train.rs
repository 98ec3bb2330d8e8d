//! The training loop: shuffled minibatches, Adam updates, per-epoch
//! metrics, and checkpointing.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use stgcn_autodiff::{read_checkpoint_file, write_checkpoint_file, Adam, AdamConfig, Tape};
use stgcn_graph::GraphLayout;
use stgcn_model::{ForwardMode, ModelConfig, StgcnModel};
use stgcn_pipeline::{read_bundle_file, DatasetBundle};

use crate::config::ExperimentConfig;
use crate::data::{batch_from_bundle, check_compatible};
use crate::error::HarnessError;
use crate::metrics::{append_record, count_topk_hits, MetricsRecord};

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub epochs_run: usize,
    pub final_train_accuracy: f64,
    /// Best evaluation top-1 seen, or best training top-1 when no
    /// evaluation data is configured.
    pub best_accuracy: f64,
    pub metrics_path: PathBuf,
    pub final_checkpoint: PathBuf,
    pub best_checkpoint: PathBuf,
    pub stopped_early: bool,
}

/// Writes the checkpoint plus a same-stem `.json` sidecar holding the
/// architecture, so the pair is enough to rebuild the model.
pub fn save_model(model: &StgcnModel, path: &Path) -> Result<(), HarnessError> {
    write_checkpoint_file(path, &model.named_parameters())?;
    let sidecar = path.with_extension("json");
    let mut json = serde_json::to_string_pretty(model.config()).expect("config serializes");
    json.push('\n');
    std::fs::write(&sidecar, json).map_err(|source| HarnessError::Io {
        path: sidecar,
        source,
    })
}

/// Rebuilds a model from a checkpoint and its `.json` sidecar. The
/// layout comes from the caller, typically a dataset bundle, since the
/// sidecar records only the layout's name.
pub fn load_model(path: &Path, layout: GraphLayout) -> Result<StgcnModel, HarnessError> {
    let sidecar = path.with_extension("json");
    let text = std::fs::read_to_string(&sidecar).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            HarnessError::MissingSidecar {
                path: path.to_path_buf(),
                sidecar: sidecar.clone(),
            }
        } else {
            HarnessError::Io {
                path: sidecar.clone(),
                source,
            }
        }
    })?;
    let config: ModelConfig =
        serde_json::from_str(&text).map_err(|source| HarnessError::MalformedModelConfig {
            path: sidecar,
            source,
        })?;
    let params = read_checkpoint_file(path)?;
    Ok(StgcnModel::from_checkpoint(config, layout, params)?)
}

/// Accuracy at each requested k over a whole bundle, batched to bound
/// memory.
pub fn evaluate(
    model: &StgcnModel,
    bundle: &DatasetBundle,
    ks: &[usize],
    batch_size: usize,
) -> Result<Vec<f64>, HarnessError> {
    if ks.is_empty() {
        return Err(HarnessError::NoTopK);
    }
    if batch_size == 0 {
        return Err(HarnessError::ZeroBatchSize);
    }
    let indices: Vec<usize> = (0..bundle.samples.len()).collect();
    let mut hits = vec![0usize; ks.len()];
    for chunk in indices.chunks(batch_size) {
        let batch = batch_from_bundle(bundle, chunk)?;
        let mut tape = Tape::new();
        let pass = model.forward(&mut tape, &batch, ForwardMode::Eval)?;
        let logits = tape
            .value(pass.logits)
            .map_err(stgcn_model::ModelError::from)?;
        for (hit, &k) in hits.iter_mut().zip(ks) {
            *hit += count_topk_hits(&logits, batch.labels(), k)?;
        }
    }
    let total = bundle.samples.len().max(1);
    Ok(hits.iter().map(|&h| h as f64 / total as f64).collect())
}

fn shuffle(indices: &mut [usize], rng: &mut ChaCha8Rng) {
    for i in (1..indices.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        indices.swap(i, j);
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    std::fs::write(path, bytes).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

struct EpochStats {
    loss: f64,
    top1: f64,
    top5: f64,
}

/// Runs one epoch of minibatch training and reports metrics measured on
/// the training batches themselves, with the parameters each batch was
/// scored against.
fn train_epoch(
    model: &mut StgcnModel,
    bundle: &DatasetBundle,
    indices: &[usize],
    batch_size: usize,
    adam: &mut Adam,
    dropout_rng: &mut ChaCha8Rng,
) -> Result<EpochStats, HarnessError> {
    let mut loss_sum = 0.0;
    let mut hits1 = 0usize;
    let mut hits5 = 0usize;
    for chunk in indices.chunks(batch_size) {
        let batch = batch_from_bundle(bundle, chunk)?;
        let mut tape = Tape::new();
        let pass = model.forward(
            &mut tape,
            &batch,
            ForwardMode::Train {
                dropout_rng: &mut *dropout_rng,
            },
        )?;
        let loss = tape
            .cross_entropy(pass.logits, batch.labels())
            .map_err(stgcn_model::ModelError::from)?;
        let logits = tape
            .value(pass.logits)
            .map_err(stgcn_model::ModelError::from)?;
        let loss_value = tape
            .value(loss)
            .map_err(stgcn_model::ModelError::from)?
            .data()[0];
        hits1 += count_topk_hits(&logits, batch.labels(), 1)?;
        hits5 += count_topk_hits(&logits, batch.labels(), 5)?;
        loss_sum += loss_value * chunk.len() as f64;
        let mut grads = tape.backward(loss).map_err(stgcn_model::ModelError::from)?;
        let grad_tensors: Vec<_> = pass
            .param_refs
            .iter()
            .map(|&r| {
                grads
                    .take(r)
                    .expect("every parameter participates in the forward pass")
            })
            .collect();
        let grad_refs: Vec<&_> = grad_tensors.iter().collect();
        adam.step(model.parameter_values_mut(), &grad_refs)
            .map_err(stgcn_model::ModelError::from)?;
    }
    let total = indices.len() as f64;
    Ok(EpochStats {
        loss: loss_sum / total,
        top1: hits1 as f64 / total,
        top5: hits5 as f64 / total,
    })
}

/// Trains a fresh model to completion under the given configuration.
///
/// Everything stochastic draws from streams seeded by the run seed:
/// parameter initialization from `seed`, batch shuffling from
/// `seed + 1`, dropout masks from `seed + 2`. Two runs of the same
/// configuration produce identical metrics (wall time aside) and
/// identical checkpoint bytes.
pub fn train(config: &ExperimentConfig) -> Result<TrainOutcome, HarnessError> {
    config.validate()?;
    let train_bundle = read_bundle_file(&config.train_data)?;
    check_compatible(&config.model, &train_bundle, &config.train_data)?;
    let eval_bundle = match &config.eval_data {
        Some(path) => {
            let bundle = read_bundle_file(path)?;
            check_compatible(&config.model, &bundle, path)?;
            let (train_t, train_v, _) = train_bundle.shape().expect("checked non-empty");
            let (eval_t, eval_v, _) = bundle.shape().expect("checked non-empty");
            if (train_t, train_v) != (eval_t, eval_v) {
                return Err(HarnessError::BundleShapeMismatch {
                    train_t,
                    train_v,
                    eval_t,
                    eval_v,
                });
            }
            Some(bundle)
        }
        None => None,
    };
    let layout = GraphLayout::from_spec(&train_bundle.descriptor.layout)
        .map_err(stgcn_pipeline::PipelineError::from)?;

    std::fs::create_dir_all(&config.out_dir).map_err(|source| HarnessError::Io {
        path: config.out_dir.clone(),
        source,
    })?;
    let metrics_path = config.out_dir.join("metrics.jsonl");
    let best_checkpoint = config.out_dir.join("best.stgw");
    let final_checkpoint = config.out_dir.join("final.stgw");
    let mut echo = serde_json::to_string_pretty(config).expect("config serializes");
    echo.push('\n');
    write_file(&config.out_dir.join("run-config.json"), echo.as_bytes())?;
    let mut metrics_file =
        std::fs::File::create(&metrics_path).map_err(|source| HarnessError::Io {
            path: metrics_path.clone(),
            source,
        })?;

    let mut model = StgcnModel::new(config.model.clone(), layout, config.seed)?;
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(2));
    let mut adam = Adam::new(AdamConfig::with_learning_rate(config.learning_rate));
    let mut indices: Vec<usize> = (0..train_bundle.samples.len()).collect();

    let started = Instant::now();
    let mut best_accuracy = f64::NEG_INFINITY;
    let mut best_saved = false;
    let mut final_train_accuracy = 0.0;
    let mut epochs_run = 0;
    let mut stopped_early = false;

    for epoch in 1..=config.epochs {
        let lr = config.learning_rate_at(epoch);
        adam.set_learning_rate(lr);
        shuffle(&mut indices, &mut shuffle_rng);
        let stats = train_epoch(
            &mut model,
            &train_bundle,
            &indices,
            config.batch_size,
            &mut adam,
            &mut dropout_rng,
        )?;
        epochs_run = epoch;
        final_train_accuracy = stats.top1;

        let reached_stop = config
            .stop_at_train_accuracy
            .is_some_and(|threshold| stats.top1 >= threshold);
        let last_epoch = reached_stop || epoch == config.epochs;
        let eval_now = eval_bundle.is_some() && (epoch % config.eval_every == 0 || last_epoch);
        let eval_accuracy = match (&eval_bundle, eval_now) {
            (Some(bundle), true) => {
                let acc = evaluate(&model, bundle, &[1, 5], config.batch_size)?;
                Some((acc[0], acc[1]))
            }
            _ => None,
        };

        let record = MetricsRecord {
            epoch,
            train_loss: stats.loss,
            top1: stats.top1,
            top5: stats.top5,
            lr,
            wall_time_s: started.elapsed().as_secs_f64(),
            eval_top1: eval_accuracy.map(|(top1, _)| top1),
            eval_top5: eval_accuracy.map(|(_, top5)| top5),
        };
        append_record(&mut metrics_file, &record).map_err(|source| HarnessError::Io {
            path: metrics_path.clone(),
            source,
        })?;
        log::info!(
            "epoch {epoch}: loss {:.4}, train top-1 {:.4}{}",
            stats.loss,
            stats.top1,
            match eval_accuracy {
                Some((top1, _)) => format!(", eval top-1 {top1:.4}"),
                None => String::new(),
            }
        );

        let candidate = match eval_accuracy {
            Some((top1, _)) => Some(top1),
            None if eval_bundle.is_none() => Some(stats.top1),
            None => None,
        };
        if let Some(accuracy) = candidate {
            if accuracy > best_accuracy {
                best_accuracy = accuracy;
                save_model(&model, &best_checkpoint)?;
                best_saved = true;
            }
        }

        if reached_stop {
            stopped_early = true;
            break;
        }
    }

    save_model(&model, &final_checkpoint)?;
    if !best_saved {
        save_model(&model, &best_checkpoint)?;
        best_accuracy = final_train_accuracy;
    }
    Ok(TrainOutcome {
        epochs_run,
        final_train_accuracy,
        best_accuracy,
        metrics_path,
        final_checkpoint,
        best_checkpoint,
        stopped_early,
    })
}
