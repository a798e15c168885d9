//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sluice::{AlphaInit, AlphaPattern, Architecture, BetaPattern, Preset};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayMode {
    /// `lr₀ / (1 + rate · epoch)`.
    InverseTime,
    Constant,
}

/// How a task's head reads its layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixingMode {
    Concat,
    Skip,
    Mixture,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMode {
    Constant,
    Learned,
}

impl MixingMode {
    pub fn name(self) -> &'static str {
        match self {
            MixingMode::Concat => "concat",
            MixingMode::Skip => "skip",
            MixingMode::Mixture => "mixture",
        }
    }
}

impl AlphaMode {
    pub fn name(self) -> &'static str {
        match self {
            AlphaMode::Constant => "constant",
            AlphaMode::Learned => "learned",
        }
    }
}

/// Files of one task.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskData {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    /// Tag column; column 0 holds the token.
    pub column: usize,
    /// Additional named evaluation files, e.g. other domains.
    pub extra: BTreeMap<String, PathBuf>,
}

/// Everything that determines a training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub preset: Preset,
    pub lr: f64,
    pub lr_decay_mode: DecayMode,
    pub lr_decay: f64,
    pub patience: usize,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub ortho_weight: f64,
    /// λ per task name; tasks not listed use 1.0.
    pub lambdas: BTreeMap<String, f64>,
    /// Defaults to the first task.
    pub main_task: Option<String>,
    /// Ablation switches; when any is set they replace the preset's α/β
    /// pattern (unset ones default to learned / mixture / on).
    pub mixing: Option<MixingMode>,
    pub subspaces: Option<bool>,
    pub alpha_mode: Option<AlphaMode>,
    pub alpha_init: AlphaInit,
    pub layers: usize,
    pub hidden: usize,
    pub word_dim: usize,
    pub char_dim: usize,
    pub char_hidden: usize,
    pub mlp_dim: usize,
    pub min_count: usize,
    pub symmetric_init: bool,
    /// Task names in network order.
    pub tasks: Vec<String>,
    pub data: BTreeMap<String, TaskData>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            preset: Preset::LearnedSluice,
            lr: 0.1,
            lr_decay_mode: DecayMode::InverseTime,
            lr_decay: 0.05,
            patience: 2,
            max_epochs: 30,
            batch_size: 1,
            seed: 1,
            ortho_weight: 0.01,
            lambdas: BTreeMap::new(),
            main_task: None,
            mixing: None,
            subspaces: None,
            alpha_mode: None,
            alpha_init: AlphaInit::Biased,
            layers: 3,
            hidden: 100,
            word_dim: 64,
            char_dim: 100,
            char_hidden: 50,
            mlp_dim: 100,
            min_count: 1,
            symmetric_init: false,
            tasks: Vec::new(),
            data: BTreeMap::new(),
        }
    }
}

/// Keys accepted besides the `lambda.<task>` and `data.<task>.<field>`
/// families.
pub const CONFIG_KEYS: &[&str] = &[
    "preset",
    "lr",
    "lr_decay_mode",
    "lr_decay",
    "patience",
    "max_epochs",
    "batch_size",
    "seed",
    "ortho_weight",
    "main_task",
    "mixing",
    "subspaces",
    "alpha",
    "alpha_init",
    "layers",
    "hidden",
    "word_dim",
    "char_dim",
    "char_hidden",
    "mlp_dim",
    "min_count",
    "symmetric_init",
    "tasks",
];

fn typed<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for key {key}")))
}

fn flag(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!(
            "invalid value {value:?} for key {key}"
        ))),
    }
}

impl TrainConfig {
    /// Sets one key. Unknown keys and malformed values are configuration
    /// errors naming the key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        if let Some(task) = key.strip_prefix("lambda.") {
            self.lambdas.insert(task.to_string(), typed(key, value)?);
            return Ok(());
        }
        if let Some(rest) = key.strip_prefix("data.") {
            return self.set_data(key, rest, value);
        }
        match key {
            "preset" => {
                self.preset = value
                    .parse()
                    .map_err(|_| Error::Config(format!("invalid value {value:?} for key preset")))?
            }
            "lr" => self.lr = typed(key, value)?,
            "lr_decay_mode" => {
                self.lr_decay_mode = match value {
                    "inverse_time" => DecayMode::InverseTime,
                    "constant" => DecayMode::Constant,
                    _ => {
                        return Err(Error::Config(format!(
                            "invalid value {value:?} for key {key}"
                        )))
                    }
                }
            }
            "lr_decay" => self.lr_decay = typed(key, value)?,
            "patience" => self.patience = typed(key, value)?,
            "max_epochs" => self.max_epochs = typed(key, value)?,
            "batch_size" => self.batch_size = typed(key, value)?,
            "seed" => self.seed = typed(key, value)?,
            "ortho_weight" => self.ortho_weight = typed(key, value)?,
            "main_task" => self.main_task = Some(value.to_string()),
            "mixing" => {
                self.mixing = Some(match value {
                    "concat" => MixingMode::Concat,
                    "skip" => MixingMode::Skip,
                    "mixture" => MixingMode::Mixture,
                    _ => {
                        return Err(Error::Config(format!(
                            "invalid value {value:?} for key {key}"
                        )))
                    }
                })
            }
            "subspaces" => self.subspaces = Some(flag(key, value)?),
            "alpha" => {
                self.alpha_mode = Some(match value {
                    "constant" => AlphaMode::Constant,
                    "learned" => AlphaMode::Learned,
                    _ => {
                        return Err(Error::Config(format!(
                            "invalid value {value:?} for key {key}"
                        )))
                    }
                })
            }
            "alpha_init" => {
                self.alpha_init = value
                    .parse()
                    .map_err(|_| Error::Config(format!("invalid value {value:?} for key {key}")))?
            }
            "layers" => self.layers = typed(key, value)?,
            "hidden" => self.hidden = typed(key, value)?,
            "word_dim" => self.word_dim = typed(key, value)?,
            "char_dim" => self.char_dim = typed(key, value)?,
            "char_hidden" => self.char_hidden = typed(key, value)?,
            "mlp_dim" => self.mlp_dim = typed(key, value)?,
            "min_count" => self.min_count = typed(key, value)?,
            "symmetric_init" => self.symmetric_init = flag(key, value)?,
            "tasks" => {
                self.tasks = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
                    .collect()
            }
            _ => return Err(Error::Config(format!("unknown configuration key {key}"))),
        }
        Ok(())
    }

    fn set_data(&mut self, key: &str, rest: &str, value: &str) -> Result<()> {
        let (task, field) = rest
            .split_once('.')
            .ok_or_else(|| Error::Config(format!("unknown configuration key {key}")))?;
        let entry = self
            .data
            .entry(task.to_string())
            .or_insert_with(|| TaskData {
                column: 1,
                ..TaskData::default()
            });
        match field {
            "train" => entry.train = Some(value.into()),
            "dev" => entry.dev = Some(value.into()),
            "test" => entry.test = Some(value.into()),
            "column" => entry.column = typed(key, value)?,
            _ => match field.strip_prefix("extra.") {
                Some(split) if !split.is_empty() => {
                    entry.extra.insert(split.to_string(), value.into());
                }
                _ => return Err(Error::Config(format!("unknown configuration key {key}"))),
            },
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = TrainConfig::default();
        config.apply_text(text)?;
        Ok(config)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: format!("expected key = value, found {line:?}"),
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    /// Applies `key=value` overrides, e.g. from the command line.
    pub fn apply_overrides<'a>(&mut self, pairs: impl IntoIterator<Item = &'a str>) -> Result<()> {
        for pair in pairs {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {pair:?} is not key=value")))?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    /// Serializes every key, in a fixed order, so that
    /// `parse(to_config_string())` reproduces the configuration.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("preset", self.preset.name().into());
        kv("lr", self.lr.to_string());
        kv(
            "lr_decay_mode",
            match self.lr_decay_mode {
                DecayMode::InverseTime => "inverse_time",
                DecayMode::Constant => "constant",
            }
            .into(),
        );
        kv("lr_decay", self.lr_decay.to_string());
        kv("patience", self.patience.to_string());
        kv("max_epochs", self.max_epochs.to_string());
        kv("batch_size", self.batch_size.to_string());
        kv("seed", self.seed.to_string());
        kv("ortho_weight", self.ortho_weight.to_string());
        if let Some(m) = &self.main_task {
            kv("main_task", m.clone());
        }
        if let Some(m) = self.mixing {
            kv("mixing", m.name().into());
        }
        if let Some(s) = self.subspaces {
            kv("subspaces", if s { "on" } else { "off" }.into());
        }
        if let Some(a) = self.alpha_mode {
            kv("alpha", a.name().into());
        }
        kv(
            "alpha_init",
            match self.alpha_init {
                AlphaInit::Biased => "biased",
                AlphaInit::Uniform => "uniform",
            }
            .into(),
        );
        kv("layers", self.layers.to_string());
        kv("hidden", self.hidden.to_string());
        kv("word_dim", self.word_dim.to_string());
        kv("char_dim", self.char_dim.to_string());
        kv("char_hidden", self.char_hidden.to_string());
        kv("mlp_dim", self.mlp_dim.to_string());
        kv("min_count", self.min_count.to_string());
        kv("symmetric_init", self.symmetric_init.to_string());
        kv("tasks", self.tasks.join(","));
        for (task, l) in &self.lambdas {
            kv(&format!("lambda.{task}"), l.to_string());
        }
        for (task, d) in &self.data {
            for (field, p) in [("train", &d.train), ("dev", &d.dev), ("test", &d.test)] {
                if let Some(p) = p {
                    kv(&format!("data.{task}.{field}"), p.display().to_string());
                }
            }
            kv(&format!("data.{task}.column"), d.column.to_string());
            for (split, p) in &d.extra {
                kv(
                    &format!("data.{task}.extra.{split}"),
                    p.display().to_string(),
                );
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be > 0, got {}", self.lr)));
        }
        if !(self.lr_decay >= 0.0 && self.lr_decay.is_finite()) {
            return Err(Error::Config(format!(
                "lr_decay must be >= 0, got {}",
                self.lr_decay
            )));
        }
        if self.patience < 1 {
            return Err(Error::Config("patience must be >= 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.max_epochs < 1 {
            return Err(Error::Config("max_epochs must be >= 1".into()));
        }
        if !(self.ortho_weight >= 0.0 && self.ortho_weight.is_finite()) {
            return Err(Error::Config("ortho_weight must be >= 0".into()));
        }
        for (task, l) in &self.lambdas {
            if !(*l >= 0.0 && l.is_finite()) {
                return Err(Error::Config(format!("lambda.{task} must be >= 0")));
            }
        }
        Ok(())
    }

    fn ablation_active(&self) -> bool {
        self.mixing.is_some() || self.subspaces.is_some() || self.alpha_mode.is_some()
    }

    /// α/β pattern implied by the preset, or by the ablation switches when
    /// any of them is set.
    pub fn architecture(&self) -> Architecture {
        if !self.ablation_active() {
            return self.preset.architecture();
        }
        let subspaces = self.subspaces.unwrap_or(true);
        let alpha = match (self.alpha_mode.unwrap_or(AlphaMode::Learned), subspaces) {
            (AlphaMode::Constant, _) => AlphaPattern::Constant,
            (AlphaMode::Learned, true) => AlphaPattern::Full,
            (AlphaMode::Learned, false) => AlphaPattern::SubspaceTied,
        };
        let beta = match self.mixing.unwrap_or(MixingMode::Mixture) {
            MixingMode::Concat => BetaPattern::Concat,
            MixingMode::Skip => BetaPattern::AllOnes,
            MixingMode::Mixture => BetaPattern::Learned,
        };
        Architecture { alpha, beta }
    }

    /// Orthogonality weight actually used: subspaces switched off means no
    /// penalty between them either.
    pub fn effective_ortho_weight(&self) -> f64 {
        if self.ablation_active() && !self.subspaces.unwrap_or(true) {
            0.0
        } else {
            self.ortho_weight
        }
    }

    pub fn lambda(&self, task: &str) -> f64 {
        self.lambdas.get(task).copied().unwrap_or(1.0)
    }
}
