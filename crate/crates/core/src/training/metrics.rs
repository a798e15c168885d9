use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::sluice::{Architecture, SluiceModel};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskEpoch {
    /// Mean token cross-entropy over this task's batches.
    pub train_loss: Option<f64>,
    pub dev_accuracy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// Numbered from 1.
    pub epoch: usize,
    pub lr: f64,
    pub updates: usize,
    pub tasks: BTreeMap<String, TaskEpoch>,
    /// Largest α gradient norm seen in any update of the epoch.
    pub alpha_grad_norm_max: f64,
    /// `[layer][to][from]` after the epoch.
    pub alpha: Vec<Vec<Vec<f64>>>,
    /// `[task][layer]` after the epoch.
    pub beta: Vec<Vec<f64>>,
}

/// Outcome of one training run.
///
/// Wall-clock measurements are kept out of the serialized form so that
/// identical runs serialize identically; see [`MetricsRecord::timing_json`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub preset: String,
    pub architecture: Architecture,
    pub seed: u64,
    pub tasks: Vec<String>,
    pub main_task: String,
    pub epochs: Vec<EpochRecord>,
    /// Epoch (from 1) whose parameters were kept.
    pub best_epoch: usize,
    pub best_dev_accuracy: Option<f64>,
    pub stopped_early: bool,
    /// task → split → token accuracy of the kept parameters.
    pub test_accuracy: BTreeMap<String, BTreeMap<String, f64>>,
    #[serde(skip)]
    pub epoch_seconds: Vec<f64>,
}

impl MetricsRecord {
    pub fn main_dev_history(&self) -> Vec<f64> {
        self.epochs
            .iter()
            .filter_map(|e| e.tasks.get(&self.main_task).and_then(|t| t.dev_accuracy))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }

    pub fn timing_json(&self) -> String {
        serde_json::json!({ "epoch_seconds": self.epoch_seconds }).to_string()
    }

    pub fn mean_epoch_seconds(&self) -> f64 {
        if self.epoch_seconds.is_empty() {
            return 0.0;
        }
        self.epoch_seconds.iter().sum::<f64>() / self.epoch_seconds.len() as f64
    }
}

/// α matrices and β rows of a model as plain numbers.
pub fn mixing_snapshot<T: Scalar>(model: &SluiceModel<T>) -> (Vec<Vec<Vec<f64>>>, Vec<Vec<f64>>) {
    let alpha = (0..model.num_layers())
        .map(|k| {
            let a = model.alpha_matrix(k);
            (0..a.rows())
                .map(|r| a.row_slice(r).iter().map(|v| v.as_f64()).collect())
                .collect()
        })
        .collect();
    let beta = (0..model.num_tasks())
        .map(|m| model.beta_weights(m).iter().map(|v| v.as_f64()).collect())
        .collect();
    (alpha, beta)
}
