//! α/β tables as CSV and whole-model snapshots as JSON.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{ModelConfig, SluiceModel};
use crate::diffcore::Tensor;
use crate::encoder::{Vocabulary, SUBSPACES};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const ALPHA_HEADER: [&str; 6] = [
    "layer",
    "from_task",
    "from_subspace",
    "to_task",
    "to_subspace",
    "value",
];
pub const BETA_HEADER: [&str; 3] = ["task", "layer", "value"];

/// One row per α entry; layers and subspaces are numbered from 1.
pub fn write_alpha_csv<T: Scalar, W: Write>(model: &SluiceModel<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ALPHA_HEADER)?;
    let names: Vec<&str> = model.config.tasks.iter().map(|t| t.name.as_str()).collect();
    for k in 0..model.num_layers() {
        let a = model.alpha_matrix(k);
        for to in 0..a.rows() {
            for from in 0..a.cols() {
                w.write_record([
                    (k + 1).to_string(),
                    names[from / SUBSPACES].to_string(),
                    (from % SUBSPACES + 1).to_string(),
                    names[to / SUBSPACES].to_string(),
                    (to % SUBSPACES + 1).to_string(),
                    a.get(to, from).as_f64().to_string(),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("<alpha csv>", e))?;
    Ok(())
}

pub fn write_beta_csv<T: Scalar, W: Write>(model: &SluiceModel<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BETA_HEADER)?;
    for (m, spec) in model.config.tasks.iter().enumerate() {
        for (k, v) in model.beta_weights(m).into_iter().enumerate() {
            w.write_record([
                spec.name.clone(),
                (k + 1).to_string(),
                v.as_f64().to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<beta csv>", e))?;
    Ok(())
}

/// Writes `alpha.csv` and `beta.csv` into `dir`.
pub fn export_mixing<T: Scalar>(model: &SluiceModel<T>, dir: &Path) -> Result<()> {
    let alpha = dir.join("alpha.csv");
    let beta = dir.join("beta.csv");
    write_alpha_csv(
        model,
        std::fs::File::create(&alpha).map_err(|e| Error::io(&alpha, e))?,
    )?;
    write_beta_csv(
        model,
        std::fs::File::create(&beta).map_err(|e| Error::io(&beta, e))?,
    )?;
    Ok(())
}

pub const SNAPSHOT_FORMAT: &str = "sluice-snapshot";
pub const SNAPSHOT_VERSION: u32 = 1;

/// Textual parameter dump.
///
/// Layout: a header (`format`, `version`), the model configuration, the
/// vocabulary, the number of updates applied, and every parameter by name
/// with its shape and row-major values.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Snapshot {
    pub format: String,
    pub version: u32,
    pub config: ModelConfig,
    pub vocab: Vocabulary,
    pub updates: usize,
    pub params: Vec<ParamDump>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParamDump {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl<T: Scalar> SluiceModel<T> {
    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            format: SNAPSHOT_FORMAT.into(),
            version: SNAPSHOT_VERSION,
            config: self.config.clone(),
            vocab: self.vocab.clone(),
            updates: self.updates(),
            params: self
                .store
                .iter()
                .map(|(_, p)| ParamDump {
                    name: p.name.clone(),
                    rows: p.value.rows(),
                    cols: p.value.cols(),
                    values: p.value.to_f64_vec(),
                })
                .collect(),
        }
    }

    /// Rebuilds a model from a snapshot; every parameter must be present
    /// with the shape the configuration implies.
    pub fn from_snapshot(snapshot: Snapshot) -> Result<Self> {
        if snapshot.format != SNAPSHOT_FORMAT || snapshot.version != SNAPSHOT_VERSION {
            return Err(Error::Input(format!(
                "unsupported snapshot {} version {}",
                snapshot.format, snapshot.version
            )));
        }
        let mut vocab = snapshot.vocab;
        vocab.rebuild_index();
        let mut model = SluiceModel::new(snapshot.config, vocab)?;
        if snapshot.params.len() != model.store.len() {
            return Err(Error::Input(format!(
                "snapshot has {} parameters, model expects {}",
                snapshot.params.len(),
                model.store.len()
            )));
        }
        for p in snapshot.params {
            let id = model.store.id(&p.name).ok_or_else(|| {
                Error::Input(format!("snapshot parameter {} unknown to model", p.name))
            })?;
            let expect = model.store.value(id).shape();
            if expect != (p.rows, p.cols) {
                return Err(Error::Input(format!(
                    "snapshot parameter {} has shape {}x{}, model expects {}x{}",
                    p.name, p.rows, p.cols, expect.0, expect.1
                )));
            }
            *model.store.value_mut(id) = Tensor::from_f64(p.rows, p.cols, &p.values)?;
        }
        model.set_updates(snapshot.updates);
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&self.snapshot())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let snap: Snapshot = serde_json::from_str(&text)?;
        Self::from_snapshot(snap)
    }
}
