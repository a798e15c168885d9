//! Experiment protocols: synthetic Random/Copy auxiliary tasks, fitting
//! random noise, and the ablation grid.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{AlphaMode, MixingMode, TrainConfig};
use super::run::{build_model, evaluate_accuracy, lr_schedule, run_training, train_epoch};
use crate::data::{epoch_batches, make_copy_aux, make_noise_corpus, make_random_relabel, Corpus};
use crate::diffcore::Rng;
use crate::encoder::SUBSPACES;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sluice::{AlphaInit, Preset, SluiceModel};

const BATCH_STREAM: u64 = 7;
const RELABEL_STREAM: u64 = 11;

/// Runs `f` over `items` on at most `jobs` threads, keeping input order.
pub fn parallel_map<I, O, F>(items: Vec<I>, jobs: usize, f: F) -> Result<Vec<O>>
where
    I: Send,
    O: Send,
    F: Fn(I) -> Result<O> + Sync + Send,
{
    if jobs <= 1 {
        return items.into_iter().map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} worker threads: {e}")))?;
    pool.install(|| items.into_par_iter().map(f).collect())
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuxMode {
    /// Auxiliary labels drawn uniformly at random.
    Random,
    /// Auxiliary task is an exact copy of the target.
    Copy,
}

impl AuxMode {
    pub fn name(self) -> &'static str {
        match self {
            AuxMode::Random => "random",
            AuxMode::Copy => "copy",
        }
    }
}

impl std::str::FromStr for AuxMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(AuxMode::Random),
            "copy" => Ok(AuxMode::Copy),
            _ => Err(Error::Config(format!(
                "unknown mode {s}, expected random or copy"
            ))),
        }
    }
}

/// Relative weight of task `aux` in the α rows feeding task `target`:
/// the mean over layers and target subspaces of
/// `Σ|α into target from aux| / Σ|α into target from target|`.
pub fn alpha_ratio<T: Scalar>(model: &SluiceModel<T>, target: usize, aux: usize) -> f64 {
    let mut total = 0.0;
    let mut count = 0;
    for k in 0..model.num_layers() {
        let a = model.alpha_matrix(k);
        for s in 0..SUBSPACES {
            let row = target * SUBSPACES + s;
            let sum = |task: usize| -> f64 {
                (0..SUBSPACES)
                    .map(|j| a.get(row, task * SUBSPACES + j).as_f64().abs())
                    .sum()
            };
            total += sum(aux) / sum(target);
            count += 1;
        }
    }
    total / count as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticRun {
    pub n: usize,
    pub seed: u64,
    pub ratio_init: f64,
    pub ratio: f64,
}

/// Trains a two-task sluice network on the first `n` target sentences and
/// an auxiliary task built from them, for `config.max_epochs` epochs, and
/// reports the α ratio before and after.
pub fn synthetic_run(
    source: &Corpus,
    n: usize,
    mode: AuxMode,
    config: &TrainConfig,
) -> Result<SyntheticRun> {
    if source.train.len() < n || n == 0 {
        return Err(Error::Input(format!(
            "synthetic experiment needs {n} sentences, source {} has {}",
            source.task.name,
            source.train.len()
        )));
    }
    let mut target = Corpus::new(source.task.clone());
    target.task.is_main = true;
    target.train = source.train[..n].to_vec();
    let aux = match mode {
        AuxMode::Random => {
            let mut rng = Rng::new(config.seed).fork(RELABEL_STREAM);
            make_random_relabel(&target, &mut rng)
        }
        AuxMode::Copy => make_copy_aux(&target),
    };
    let corpora = [target, aux];
    let mut model = build_model(config, &corpora)?;
    let ratio_init = alpha_ratio(&model, 0, 1);
    let sizes: Vec<usize> = corpora.iter().map(|c| c.train.len()).collect();
    let mut rng = Rng::new(config.seed).fork(BATCH_STREAM);
    for e in 0..config.max_epochs {
        let batches = epoch_batches(&sizes, config.batch_size, &mut rng);
        train_epoch(
            &mut model,
            &corpora,
            &batches,
            lr_schedule(e, config),
            e + 1,
        )?;
    }
    Ok(SyntheticRun {
        n,
        seed: config.seed,
        ratio_init,
        ratio: alpha_ratio(&model, 0, 1),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPoint {
    pub n: usize,
    pub ratios: Vec<f64>,
    pub median: f64,
    pub ratio_init: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCurve {
    pub mode: AuxMode,
    pub points: Vec<SyntheticPoint>,
}

impl SyntheticCurve {
    /// Relative decrease of the median ratio from the first to the last
    /// point of the sweep.
    pub fn relative_drop(&self) -> f64 {
        let first = self.points.first().map_or(f64::NAN, |p| p.median);
        let last = self.points.last().map_or(f64::NAN, |p| p.median);
        (first - last) / first
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("mode,n,median_ratio,ratio_init,seed_ratios\n");
        for p in &self.points {
            let seeds: Vec<String> = p.ratios.iter().map(|r| r.to_string()).collect();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                self.mode.name(),
                p.n,
                p.median,
                p.ratio_init,
                seeds.join(";")
            );
        }
        out
    }
}

/// The α-ratio curve over `sweep`, one run per seed and size, medians
/// across seeds. The training recipe is `config` with the learned sluice
/// architecture and uniform α initialization.
pub fn run_synthetic_experiment(
    source: &Corpus,
    sweep: &[usize],
    mode: AuxMode,
    config: &TrainConfig,
    seeds: &[u64],
    jobs: usize,
) -> Result<SyntheticCurve> {
    let mut base = config.clone();
    base.preset = Preset::LearnedSluice;
    base.alpha_init = AlphaInit::Uniform;
    base.mixing = None;
    base.subspaces = None;
    base.alpha_mode = None;
    base.main_task = None;
    let mut cells = Vec::new();
    for &n in sweep {
        for &seed in seeds {
            let mut c = base.clone();
            c.seed = seed;
            cells.push((n, c));
        }
    }
    let runs = parallel_map(cells, jobs, |(n, c)| synthetic_run(source, n, mode, &c))?;
    let points = sweep
        .iter()
        .map(|&n| {
            let of_n: Vec<&SyntheticRun> = runs.iter().filter(|r| r.n == n).collect();
            let ratios: Vec<f64> = of_n.iter().map(|r| r.ratio).collect();
            SyntheticPoint {
                n,
                median: median(&ratios),
                ratio_init: of_n.first().map_or(f64::NAN, |r| r.ratio_init),
                ratios,
            }
        })
        .collect();
    Ok(SyntheticCurve { mode, points })
}

/// Stop rule for learning curves: fewer than `min_gain` absolute accuracy
/// gained by the last `window` epochs over everything before them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlateauRule {
    pub window: usize,
    pub min_gain: f64,
}

pub const PLATEAU: PlateauRule = PlateauRule {
    window: 15,
    min_gain: 0.005,
};

impl PlateauRule {
    pub fn reached(&self, curve: &[f64]) -> bool {
        if curve.len() <= self.window {
            return false;
        }
        let split = curve.len() - self.window;
        let before = curve[..split].iter().cloned().fold(f64::MIN, f64::max);
        let recent = curve[split..].iter().cloned().fold(f64::MIN, f64::max);
        recent - before < self.min_gain
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSeries {
    pub architecture: String,
    /// Main-task training accuracy after each epoch.
    pub accuracies: Vec<f64>,
    pub plateaued: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseCurves {
    pub seed: u64,
    pub majority_accuracy: f64,
    pub plateau: PlateauRule,
    pub series: Vec<NoiseSeries>,
}

impl NoiseCurves {
    pub fn series(&self, architecture: &str) -> Option<&NoiseSeries> {
        self.series.iter().find(|s| s.architecture == architecture)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("seed,architecture,epoch,train_accuracy\n");
        for s in &self.series {
            for (e, a) in s.accuracies.iter().enumerate() {
                let _ = writeln!(out, "{},{},{},{}", self.seed, s.architecture, e + 1, a);
            }
        }
        out
    }
}

pub const NOISE_ARCHITECTURES: [(&str, Preset); 3] = [
    ("single", Preset::SingleTask),
    ("hard", Preset::HardSharing),
    ("sluice", Preset::LearnedSluice),
];

fn majority_accuracy(corpus: &Corpus) -> f64 {
    let mut counts = vec![0usize; corpus.task.num_labels()];
    let mut total = 0;
    for s in &corpus.train {
        for &t in &s.tags {
            counts[t] += 1;
            total += 1;
        }
    }
    *counts.iter().max().unwrap_or(&0) as f64 / total.max(1) as f64
}

/// Learning curves of the single-task, hard-sharing and sluice models on
/// randomly relabeled chunking (main) plus gold POS (auxiliary), each
/// trained until its training accuracy plateaus or `max_epochs`.
pub fn run_noise_experiment(
    chunk: &Corpus,
    pos: &Corpus,
    main_sentences: usize,
    aux_sentences: usize,
    config: &TrainConfig,
) -> Result<NoiseCurves> {
    let mut rng = Rng::new(config.seed).fork(RELABEL_STREAM);
    let (main, aux) = make_noise_corpus(main_sentences, aux_sentences, chunk, pos, &mut rng)?;
    let mut series = Vec::new();
    for (name, preset) in NOISE_ARCHITECTURES {
        let corpora: Vec<Corpus> = if preset == Preset::SingleTask {
            vec![main.clone()]
        } else {
            vec![main.clone(), aux.clone()]
        };
        let mut c = config.clone();
        c.preset = preset;
        c.mixing = None;
        c.subspaces = None;
        c.alpha_mode = None;
        c.main_task = None;
        let mut model = build_model(&c, &corpora)?;
        let sizes: Vec<usize> = corpora.iter().map(|c| c.train.len()).collect();
        let mut batch_rng = Rng::new(c.seed).fork(BATCH_STREAM);
        let mut accuracies = Vec::new();
        let mut plateaued = false;
        for e in 0..c.max_epochs {
            let batches = epoch_batches(&sizes, c.batch_size, &mut batch_rng);
            train_epoch(&mut model, &corpora, &batches, lr_schedule(e, &c), e + 1)?;
            accuracies.push(evaluate_accuracy(&model, &corpora[0].train, 0)?);
            if PLATEAU.reached(&accuracies) {
                plateaued = true;
                break;
            }
        }
        series.push(NoiseSeries {
            architecture: name.to_string(),
            accuracies,
            plateaued,
        });
    }
    Ok(NoiseCurves {
        seed: config.seed,
        majority_accuracy: majority_accuracy(&main),
        plateau: PLATEAU,
        series,
    })
}

/// One configuration of the ablation grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AblationCell {
    pub alpha: AlphaMode,
    pub mixing: MixingMode,
    pub subspaces: bool,
}

/// Constant α with each of the three layer combinations, learned α with
/// each of them, and learned α with mixture plus subspaces.
pub const ABLATION_GRID: [AblationCell; 7] = [
    AblationCell {
        alpha: AlphaMode::Constant,
        mixing: MixingMode::Concat,
        subspaces: false,
    },
    AblationCell {
        alpha: AlphaMode::Constant,
        mixing: MixingMode::Skip,
        subspaces: false,
    },
    AblationCell {
        alpha: AlphaMode::Constant,
        mixing: MixingMode::Mixture,
        subspaces: false,
    },
    AblationCell {
        alpha: AlphaMode::Learned,
        mixing: MixingMode::Concat,
        subspaces: false,
    },
    AblationCell {
        alpha: AlphaMode::Learned,
        mixing: MixingMode::Skip,
        subspaces: false,
    },
    AblationCell {
        alpha: AlphaMode::Learned,
        mixing: MixingMode::Mixture,
        subspaces: false,
    },
    AblationCell {
        alpha: AlphaMode::Learned,
        mixing: MixingMode::Mixture,
        subspaces: true,
    },
];

impl AblationCell {
    pub fn apply(&self, base: &TrainConfig) -> TrainConfig {
        let mut c = base.clone();
        c.alpha_mode = Some(self.alpha);
        c.mixing = Some(self.mixing);
        c.subspaces = Some(self.subspaces);
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub cell: AblationCell,
    pub dev_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
    /// Largest α gradient norm over all updates of the run.
    pub alpha_grad_norm_max: f64,
    pub epochs: usize,
}

pub const ABLATION_HEADER: &str =
    "alpha,mixing,subspaces,dev_accuracy,test_accuracy,alpha_grad_norm_max,epochs";

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    let mut out = format!("{ABLATION_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.cell.alpha.name(),
            r.cell.mixing.name(),
            if r.cell.subspaces { "on" } else { "off" },
            opt(r.dev_accuracy),
            opt(r.test_accuracy),
            r.alpha_grad_norm_max,
            r.epochs
        );
    }
    out
}

/// One full training run per grid cell; main-task accuracies of the kept
/// parameters.
pub fn run_ablation(
    base: &TrainConfig,
    corpora: &[Corpus],
    grid: &[AblationCell],
    jobs: usize,
) -> Result<Vec<AblationRow>> {
    let cells: Vec<AblationCell> = grid.to_vec();
    parallel_map(cells, jobs, |cell| {
        let config = cell.apply(base);
        let outcome = run_training(&config, corpora)?;
        let m = &outcome.metrics;
        let test = m
            .test_accuracy
            .get(&m.main_task)
            .and_then(|splits| splits.get("test"))
            .copied();
        Ok(AblationRow {
            cell,
            dev_accuracy: m.best_dev_accuracy,
            test_accuracy: test,
            alpha_grad_norm_max: m
                .epochs
                .iter()
                .map(|e| e.alpha_grad_norm_max)
                .fold(0.0, f64::max),
            epochs: m.epochs.len(),
        })
    })
}
