//! Experiment configuration: everything a training run needs, in one
//! JSON file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stgcn_model::ModelConfig;

use crate::error::HarnessError;

fn default_decay_factor() -> f64 {
    0.1
}

fn default_eval_every() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    /// Packed training bundle.
    pub train_data: PathBuf,
    /// Packed evaluation bundle; without one, only training metrics are
    /// reported.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_data: Option<PathBuf>,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Multiplier applied to the learning rate at each milestone.
    #[serde(default = "default_decay_factor")]
    pub decay_factor: f64,
    /// Epochs (1-based) at which the learning rate decays. An epoch's
    /// rate is `learning_rate * decay_factor^m` where `m` counts the
    /// milestones at or before it.
    #[serde(default)]
    pub decay_milestones: Vec<usize>,
    pub epochs: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Evaluate every this many epochs when eval data is configured.
    #[serde(default = "default_eval_every")]
    pub eval_every: usize,
    /// Stop once train top-1 accuracy reaches this threshold.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_at_train_accuracy: Option<f64>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.model.validate()?;
        if self.batch_size == 0 {
            return Err(HarnessError::ZeroBatchSize);
        }
        if self.epochs == 0 {
            return Err(HarnessError::ZeroEpochs);
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(HarnessError::BadLearningRate(self.learning_rate));
        }
        if !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return Err(HarnessError::BadDecayFactor(self.decay_factor));
        }
        if self.eval_every == 0 {
            return Err(HarnessError::ZeroEvalEvery);
        }
        if let Some(threshold) = self.stop_at_train_accuracy {
            if !(threshold > 0.0 && threshold <= 1.0) {
                return Err(HarnessError::BadStopThreshold(threshold));
            }
        }
        Ok(())
    }

    /// Loads a config, resolving its relative paths against the file's
    /// directory.
    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: ExperimentConfig =
            serde_json::from_str(&text).map_err(|source| HarnessError::MalformedConfig {
                path: path.to_path_buf(),
                source,
            })?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.train_data = base.join(&config.train_data);
        if let Some(eval) = config.eval_data.take() {
            config.eval_data = Some(base.join(eval));
        }
        config.out_dir = base.join(&config.out_dir);
        config.validate()?;
        Ok(config)
    }

    /// Learning rate in force during a 1-based epoch.
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        let decays = self
            .decay_milestones
            .iter()
            .filter(|&&m| m <= epoch)
            .count();
        self.learning_rate * self.decay_factor.powi(decays as i32)
    }
}
