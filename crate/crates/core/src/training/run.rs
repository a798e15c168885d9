use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::time::Instant;

use super::config::{DecayMode, TrainConfig};
use super::metrics::{mixing_snapshot, EpochRecord, MetricsRecord, TaskEpoch};
use crate::data::{
    build_vocab, epoch_batches, load_corpus, Batch, Corpus, CorpusFiles, TaggedSentence,
};
use crate::diffcore::Rng;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sluice::{export_mixing, ModelConfig, SluiceModel};

const BATCH_STREAM: u64 = 7;

/// `lr₀ / (1 + rate · epoch)` for epochs counted from 0.
pub fn lr_schedule(epoch: usize, config: &TrainConfig) -> f64 {
    match config.lr_decay_mode {
        DecayMode::InverseTime => config.lr / (1.0 + config.lr_decay * epoch as f64),
        DecayMode::Constant => config.lr,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EarlyStop {
    Continue,
    /// Best epoch, numbered from 1.
    Stop {
        best_epoch: usize,
    },
}

/// First epoch (from 1) reaching the highest value of `history`.
pub fn best_epoch(history: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in history.iter().enumerate() {
        if v > history[best] {
            best = i;
        }
    }
    best + 1
}

/// Stops once the best value is `patience` or more epochs old.
pub fn early_stop_check(history: &[f64], patience: usize) -> EarlyStop {
    if history.is_empty() {
        return EarlyStop::Continue;
    }
    let best = best_epoch(history);
    if history.len() - best >= patience {
        EarlyStop::Stop { best_epoch: best }
    } else {
        EarlyStop::Continue
    }
}

/// Token accuracy of several tasks, each on its own sentences. Sentences
/// shared between requests are tagged once.
pub fn evaluate_tasks<T: Scalar>(
    model: &SluiceModel<T>,
    requests: &[(usize, &[TaggedSentence])],
) -> Result<Vec<f64>> {
    let mut cache: HashMap<&[String], Vec<Vec<usize>>> = HashMap::new();
    let mut out = Vec::with_capacity(requests.len());
    for &(task, sentences) in requests {
        if sentences.is_empty() {
            return Err(Error::Input("cannot evaluate on an empty split".into()));
        }
        if task >= model.num_tasks() {
            return Err(Error::Input(format!("model has no task {task}")));
        }
        let mut correct = 0usize;
        let mut total = 0usize;
        for s in sentences {
            if !cache.contains_key(s.tokens.as_slice()) {
                let pred = model.predict(&s.tokens)?;
                cache.insert(&s.tokens, pred);
            }
            let pred = &cache[s.tokens.as_slice()][task];
            correct += pred.iter().zip(&s.tags).filter(|(p, g)| p == g).count();
            total += s.tags.len();
        }
        if total == 0 {
            return Err(Error::Input(
                "cannot evaluate on a split without tokens".into(),
            ));
        }
        out.push(correct as f64 / total as f64);
    }
    Ok(out)
}

/// Fraction of tokens whose argmax label equals the gold id.
pub fn evaluate_accuracy<T: Scalar>(
    model: &SluiceModel<T>,
    sentences: &[TaggedSentence],
    task: usize,
) -> Result<f64> {
    Ok(evaluate_tasks(model, &[(task, sentences)])?[0])
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    pub task_losses: Vec<Option<f64>>,
    pub mean_loss: f64,
    pub alpha_grad_norm_max: f64,
    pub batches: usize,
}

/// One SGD update per batch at learning rate `lr`.
pub fn train_epoch<T: Scalar>(
    model: &mut SluiceModel<T>,
    corpora: &[Corpus],
    batches: &[Batch],
    lr: f64,
    epoch: usize,
) -> Result<EpochStats> {
    let m = model.num_tasks();
    let mut sums = vec![0.0; m];
    let mut counts = vec![0usize; m];
    let mut total = 0.0;
    let mut grad_max: f64 = 0.0;
    for (i, batch) in batches.iter().enumerate() {
        let examples: Vec<(usize, &TaggedSentence)> = batch
            .sentences
            .iter()
            .map(|&s| (batch.task, &corpora[batch.task].train[s]))
            .collect();
        let stats = model
            .train_step(&examples, T::lit(lr))
            .map_err(|e| Error::Batch {
                epoch,
                batch: i,
                task: corpora[batch.task].task.name.clone(),
                source: Box::new(e),
            })?;
        if !stats.loss.is_finite() {
            return Err(Error::Batch {
                epoch,
                batch: i,
                task: corpora[batch.task].task.name.clone(),
                source: Box::new(Error::NonFinite { op: "total_loss" }),
            });
        }
        total += stats.loss;
        grad_max = grad_max.max(stats.alpha_grad_norm);
        for (t, l) in stats.task_losses.iter().enumerate() {
            if let Some(l) = l {
                sums[t] += l;
                counts[t] += 1;
            }
        }
    }
    Ok(EpochStats {
        task_losses: (0..m)
            .map(|t| (counts[t] > 0).then(|| sums[t] / counts[t] as f64))
            .collect(),
        mean_loss: if batches.is_empty() {
            0.0
        } else {
            total / batches.len() as f64
        },
        alpha_grad_norm_max: grad_max,
        batches: batches.len(),
    })
}

/// Index of the main task among `corpora`: the configured name, else the
/// corpus flagged as main, else the first.
pub fn resolve_main_task(config: &TrainConfig, corpora: &[Corpus]) -> Result<usize> {
    match &config.main_task {
        Some(name) => corpora
            .iter()
            .position(|c| &c.task.name == name)
            .ok_or_else(|| {
                Error::Config(format!("main_task {name} is not among the loaded tasks"))
            }),
        None => Ok(corpora.iter().position(|c| c.task.is_main).unwrap_or(0)),
    }
}

/// Task names in network order: `tasks` if given, else every task with a
/// `data.<task>` entry.
pub fn task_names(config: &TrainConfig) -> Vec<String> {
    if config.tasks.is_empty() {
        config.data.keys().cloned().collect()
    } else {
        config.tasks.clone()
    }
}

/// Loads every task's files named in `config`, resolving relative paths
/// against `base`.
pub fn load_corpora(config: &TrainConfig, base: &Path) -> Result<Vec<Corpus>> {
    let names = task_names(config);
    if names.is_empty() {
        return Err(Error::Config(
            "no tasks configured (set tasks and data.<task>.train)".into(),
        ));
    }
    let resolve = |p: &Option<std::path::PathBuf>| p.as_ref().map(|p| base.join(p));
    names
        .iter()
        .map(|name| {
            let d = config.data.get(name).ok_or_else(|| {
                Error::Config(format!("task {name} has no data.{name}.train entry"))
            })?;
            if d.train.is_none() {
                return Err(Error::Config(format!(
                    "task {name} has no data.{name}.train entry"
                )));
            }
            let files = CorpusFiles {
                train: resolve(&d.train),
                dev: resolve(&d.dev),
                test: resolve(&d.test),
                extra_tests: d
                    .extra
                    .iter()
                    .map(|(k, p)| (k.clone(), base.join(p)))
                    .collect(),
                column: d.column,
            };
            let mut corpus = load_corpus(name, &files)?;
            corpus.task.is_main = config.main_task.as_deref() == Some(name.as_str());
            Ok(corpus)
        })
        .collect()
}

/// Untrained model for `corpora` (in order) under `config`.
pub fn build_model(config: &TrainConfig, corpora: &[Corpus]) -> Result<SluiceModel<f64>> {
    config.validate()?;
    if corpora.is_empty() {
        return Err(Error::Config("no tasks to train".into()));
    }
    for c in corpora {
        c.validate()?;
    }
    let vocab = build_vocab(corpora, config.min_count);
    let specs = corpora.iter().map(|c| c.task.clone()).collect();
    let mut mc = ModelConfig::new(specs).with_preset(config.preset);
    mc.architecture = config.architecture();
    mc.main_task = resolve_main_task(config, corpora)?;
    mc.layers = config.layers;
    mc.hidden = config.hidden;
    mc.word_dim = config.word_dim;
    mc.char_dim = config.char_dim;
    mc.char_hidden = config.char_hidden;
    mc.mlp_dim = config.mlp_dim;
    mc.alpha_init = config.alpha_init;
    mc.lambdas = corpora
        .iter()
        .map(|c| config.lambda(&c.task.name))
        .collect();
    mc.ortho_weight = config.effective_ortho_weight();
    mc.symmetric_init = config.symmetric_init;
    mc.seed = config.seed;
    SluiceModel::new(mc, vocab)
}

/// Trained model (the kept epoch's parameters) and its metrics.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: SluiceModel<f64>,
    pub metrics: MetricsRecord,
}

/// Trains until early stopping on main-task dev accuracy (or `max_epochs`),
/// keeps the best epoch's parameters and evaluates them on every test split.
///
/// Without a main-task dev split there is no model selection and the last
/// epoch is kept.
pub fn run_training(config: &TrainConfig, corpora: &[Corpus]) -> Result<TrainOutcome> {
    let model = build_model(config, corpora)?;
    run_training_with(config, corpora, model)
}

/// [`run_training`] starting from a given untrained model.
pub fn run_training_with(
    config: &TrainConfig,
    corpora: &[Corpus],
    mut model: SluiceModel<f64>,
) -> Result<TrainOutcome> {
    config.validate()?;
    let main = model.config.main_task;
    let names: Vec<String> = corpora.iter().map(|c| c.task.name.clone()).collect();
    let sizes: Vec<usize> = corpora.iter().map(|c| c.train.len()).collect();
    if sizes.iter().all(|&n| n == 0) {
        return Err(Error::Input("no training sentences".into()));
    }
    let mut rng = Rng::new(config.seed).fork(BATCH_STREAM);
    let mut epochs = Vec::new();
    let mut seconds = Vec::new();
    let mut history = Vec::new();
    let mut best: Option<SluiceModel<f64>> = None;
    let mut stopped_early = false;
    let dev_requests: Vec<(usize, &[TaggedSentence])> = corpora
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.dev.is_empty())
        .map(|(t, c)| (t, c.dev.as_slice()))
        .collect();
    for e in 0..config.max_epochs {
        let start = Instant::now();
        let lr = lr_schedule(e, config);
        let batches = epoch_batches(&sizes, config.batch_size, &mut rng);
        let stats = train_epoch(&mut model, corpora, &batches, lr, e + 1)?;
        seconds.push(start.elapsed().as_secs_f64());
        let dev = evaluate_tasks(&model, &dev_requests)?;
        let mut tasks: BTreeMap<String, TaskEpoch> = names
            .iter()
            .enumerate()
            .map(|(t, n)| {
                (
                    n.clone(),
                    TaskEpoch {
                        train_loss: stats.task_losses[t],
                        dev_accuracy: None,
                    },
                )
            })
            .collect();
        for (&(t, _), acc) in dev_requests.iter().zip(&dev) {
            tasks.get_mut(&names[t]).expect("task").dev_accuracy = Some(*acc);
        }
        let (alpha, beta) = mixing_snapshot(&model);
        epochs.push(EpochRecord {
            epoch: e + 1,
            lr,
            updates: model.updates(),
            tasks,
            alpha_grad_norm_max: stats.alpha_grad_norm_max,
            alpha,
            beta,
        });
        if let Some(acc) = dev_requests
            .iter()
            .zip(&dev)
            .find(|((t, _), _)| *t == main)
            .map(|(_, a)| *a)
        {
            history.push(acc);
            if best_epoch(&history) == history.len() {
                best = Some(model.clone());
            }
            if let EarlyStop::Stop { .. } = early_stop_check(&history, config.patience) {
                stopped_early = true;
                break;
            }
        }
    }
    let (best_epoch_no, best_dev, kept) = if history.is_empty() {
        (epochs.len(), None, model)
    } else {
        let b = best_epoch(&history);
        (
            b,
            Some(history[b - 1]),
            best.expect("best snapshot recorded"),
        )
    };
    let mut test_accuracy = BTreeMap::new();
    for (t, c) in corpora.iter().enumerate() {
        let mut splits = BTreeMap::new();
        if !c.test.is_empty() {
            splits.insert("test".to_string(), evaluate_accuracy(&kept, &c.test, t)?);
        }
        for (name, split) in &c.extra_tests {
            if !split.is_empty() {
                splits.insert(name.clone(), evaluate_accuracy(&kept, split, t)?);
            }
        }
        if !splits.is_empty() {
            test_accuracy.insert(names[t].clone(), splits);
        }
    }
    let metrics = MetricsRecord {
        preset: kept.config.preset.name().to_string(),
        architecture: kept.config.architecture,
        seed: config.seed,
        tasks: names.clone(),
        main_task: names[main].clone(),
        epochs,
        best_epoch: best_epoch_no,
        best_dev_accuracy: best_dev,
        stopped_early,
        test_accuracy,
        epoch_seconds: seconds,
    };
    Ok(TrainOutcome {
        model: kept,
        metrics,
    })
}

/// Writes `metrics.json`, `alpha.csv`, `beta.csv`, `model.json` and
/// `timing.json` into `dir`.
pub fn write_outputs(outcome: &TrainOutcome, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, text: &str| -> Result<()> {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| Error::io(&p, e))
    };
    write("metrics.json", &outcome.metrics.to_json())?;
    write("timing.json", &outcome.metrics.timing_json())?;
    export_mixing(&outcome.model, dir)?;
    outcome.model.save(&dir.join("model.json"))
}
