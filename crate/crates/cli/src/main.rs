//! `sluice`: train, evaluate and run the experiment protocols.

mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use sluice_core::data::{load_corpus, toy, Corpus, CorpusFiles, Split, TaggedSentence};
use sluice_core::training::{
    ablation_csv, load_corpora, run_ablation, run_noise_experiment, run_synthetic_experiment,
    run_training, write_outputs, AuxMode, TrainConfig, ABLATION_GRID,
};
use sluice_core::{Error, Result, SluiceModel};

use manifest::RunManifest;

#[derive(Parser, Debug)]
#[command(
    name = "sluice",
    version,
    about = "Sluice networks for multi-task sequence tagging"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train one model and write metrics, α/β CSVs and a snapshot.
    Train(TrainArgs),
    /// Token accuracy of a saved model on one split, as JSON on stdout.
    Eval(EvalArgs),
    /// α-ratio curves of the Random/Copy experiment.
    Synthetic(SyntheticArgs),
    /// Learning curves on randomly relabeled data.
    Noise(NoiseArgs),
    /// The seven-cell ablation grid.
    Ablate(AblateArgs),
    /// Write the bundled toy corpus.
    GenToy(GenToyArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct ConfigArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any config key; repeatable, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    max_epochs: Option<String>,
}

impl ConfigArgs {
    /// File, then `--set` pairs, then the dedicated flags.
    fn resolve(&self) -> Result<(TrainConfig, PathBuf)> {
        let mut config = TrainConfig::default();
        let mut base = PathBuf::from(".");
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            config.apply_text(&text).map_err(|e| match e {
                Error::Parse { line, msg } => {
                    Error::Config(format!("{}:{line}: {msg}", path.display()))
                }
                other => other,
            })?;
            base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        }
        config.apply_overrides(self.set.iter().map(String::as_str))?;
        for (key, value) in [
            ("preset", &self.preset),
            ("lr", &self.lr),
            ("seed", &self.seed),
            ("max_epochs", &self.max_epochs),
        ] {
            if let Some(v) = value {
                config.set(key, v)?;
            }
        }
        config.validate()?;
        Ok((config, base))
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value = "runs/train")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Snapshot written by `train` (model.json).
    #[arg(long)]
    model: PathBuf,
    /// Evaluate the split of every configured task...
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "dev")]
    split: String,
    /// ...or a single file for one task.
    #[arg(long, conflicts_with = "config")]
    data: Option<PathBuf>,
    #[arg(long, requires = "data")]
    task: Option<String>,
    #[arg(long, default_value_t = 1)]
    column: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Random,
    Copy,
    Both,
}

#[derive(Args, Debug)]
struct SyntheticArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, value_enum, default_value = "both")]
    mode: ModeArg,
    #[arg(long, value_delimiter = ',', default_value = "100,500,2000")]
    sweep: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    seeds: Vec<u64>,
    /// POS-style source file; the bundled generator is used otherwise.
    #[arg(long)]
    source: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    column: usize,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value = "runs/synthetic")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct NoiseArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    seeds: Vec<u64>,
    /// Task whose labels are randomized (main task).
    #[arg(long, default_value = "CHUNK")]
    noise_task: String,
    /// Gold auxiliary task.
    #[arg(long, default_value = "POS")]
    aux_task: String,
    #[arg(long, default_value_t = sluice_core::data::NOISE_MAIN_SENTENCES)]
    main_sentences: usize,
    #[arg(long, default_value_t = sluice_core::data::NOISE_AUX_SENTENCES)]
    aux_sentences: usize,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value = "runs/noise")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct AblateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value = "runs/ablation")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct GenToyArgs {
    #[arg(long, default_value = "data/toy")]
    out: PathBuf,
    #[arg(long, default_value_t = toy::BUNDLED_SEED)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Synthetic(a) => cmd_synthetic(a),
        Command::Noise(a) => cmd_noise(a),
        Command::Ablate(a) => cmd_ablate(a),
        Command::GenToy(a) => cmd_gen_toy(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 for usage and configuration errors, 1 for everything else.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        _ => 1,
    }
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let (config, base) = a.config.resolve()?;
    RunManifest::new("train", &config, &base, &a.out, json!({}))?.write(&a.out)?;
    let corpora = load_corpora(&config, &base)?;
    eprintln!(
        "training {} on {} task(s), output in {}",
        config.preset,
        corpora.len(),
        a.out.display()
    );
    let outcome = run_training(&config, &corpora)?;
    write_outputs(&outcome, &a.out)?;
    let m = &outcome.metrics;
    eprintln!(
        "kept epoch {} of {}, main dev accuracy {}",
        m.best_epoch,
        m.epochs.len(),
        m.best_dev_accuracy
            .map_or("n/a".to_string(), |v| format!("{v:.4}"))
    );
    Ok(())
}

/// Token accuracy with gold labels given by name; labels the model never
/// saw count as errors.
fn accuracy_by_name(
    model: &SluiceModel,
    task: usize,
    sentences: &[TaggedSentence],
    labels: &[String],
) -> Result<f64> {
    let inventory = &model.config.tasks[task].labels;
    let mut correct = 0usize;
    let mut total = 0usize;
    for s in sentences {
        let predicted = &model.predict(&s.tokens)?[task];
        for (p, g) in predicted.iter().zip(&s.tags) {
            total += 1;
            if inventory[*p] == labels[*g] {
                correct += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::Input("evaluation split has no tokens".into()));
    }
    Ok(correct as f64 / total as f64)
}

fn split_of<'a>(corpus: &'a Corpus, split: &str) -> &'a [TaggedSentence] {
    match split {
        "train" => corpus.split(Split::Train),
        "dev" => corpus.split(Split::Dev),
        "test" => corpus.split(Split::Test),
        other => corpus.extra_tests.get(other).map_or(&[], Vec::as_slice),
    }
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let model = SluiceModel::load(&a.model)?;
    let mut results = serde_json::Map::new();
    if let Some(path) = &a.data {
        let task = match &a.task {
            Some(t) => t.clone(),
            None => model.config.tasks[model.config.main_task].name.clone(),
        };
        let t = model
            .task_index(&task)
            .ok_or_else(|| Error::Input(format!("model has no task {task}")))?;
        let files = CorpusFiles {
            test: Some(path.clone()),
            column: a.column,
            ..Default::default()
        };
        let (sentences, labels) = load_split(&task, &files)?;
        if sentences.is_empty() {
            return Err(Error::Input(format!(
                "{} contains no sentences",
                path.display()
            )));
        }
        results.insert(
            task,
            json!(accuracy_by_name(&model, t, &sentences, &labels)?),
        );
    } else {
        let args = ConfigArgs {
            config: a.config.clone(),
            ..Default::default()
        };
        let (config, base) = args.resolve()?;
        for corpus in load_corpora(&config, &base)? {
            let Some(t) = model.task_index(&corpus.task.name) else {
                continue;
            };
            let sentences = split_of(&corpus, &a.split);
            if sentences.is_empty() {
                return Err(Error::Input(format!(
                    "task {} has no {} split",
                    corpus.task.name, a.split
                )));
            }
            let acc = accuracy_by_name(&model, t, sentences, &corpus.task.labels)?;
            results.insert(corpus.task.name.clone(), json!(acc));
        }
        if results.is_empty() {
            return Err(Error::Input("no configured task matches the model".into()));
        }
    }
    let out = json!({ "split": a.split, "accuracy": results });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

/// One file parsed with its own label inventory, which may contain labels
/// unknown to the model.
fn load_split(task: &str, files: &CorpusFiles) -> Result<(Vec<TaggedSentence>, Vec<String>)> {
    let path = files.test.as_ref().expect("test path");
    let text = sluice_core::data::conll::read_file(path)?;
    sluice_core::data::parse_conll(&text, files.column).map_err(|e| match e {
        Error::Parse { line, msg } => {
            Error::Input(format!("{}:{line}: {msg} (task {task})", path.display()))
        }
        other => other,
    })
}

fn cmd_synthetic(a: SyntheticArgs) -> Result<()> {
    let (config, base) = a.config.resolve()?;
    let largest = a.sweep.iter().copied().max().unwrap_or(0);
    let mut manifest = RunManifest::new(
        "synthetic",
        &config,
        &base,
        &a.out,
        json!({ "mode": format!("{:?}", a.mode).to_lowercase(), "sweep": a.sweep, "seeds": a.seeds }),
    )?;
    let source = match &a.source {
        Some(p) => {
            manifest.corpora.push(manifest::CorpusFile {
                task: "source".into(),
                split: "train".into(),
                path: p.clone(),
                sha256: manifest::sha256_file(p)?,
            });
            let files = CorpusFiles {
                train: Some(p.clone()),
                column: a.column,
                ..Default::default()
            };
            load_corpus("POS", &files)?
        }
        None => toy::synthetic_source(largest),
    };
    manifest.write(&a.out)?;
    let modes = match a.mode {
        ModeArg::Random => vec![AuxMode::Random],
        ModeArg::Copy => vec![AuxMode::Copy],
        ModeArg::Both => vec![AuxMode::Random, AuxMode::Copy],
    };
    for mode in modes {
        eprintln!("synthetic {} over {:?}", mode.name(), a.sweep);
        let curve = run_synthetic_experiment(&source, &a.sweep, mode, &config, &a.seeds, a.jobs)?;
        write_file(
            &a.out,
            &format!("synthetic_{}.csv", mode.name()),
            &curve.to_csv(),
        )?;
        eprintln!("relative drop {:.3}", curve.relative_drop());
    }
    Ok(())
}

fn find_task(corpora: &[Corpus], name: &str) -> Result<Corpus> {
    corpora
        .iter()
        .find(|c| c.task.name == name)
        .cloned()
        .ok_or_else(|| Error::Config(format!("no task named {name} is configured")))
}

fn cmd_noise(a: NoiseArgs) -> Result<()> {
    let (config, base) = a.config.resolve()?;
    RunManifest::new(
        "noise",
        &config,
        &base,
        &a.out,
        json!({ "seeds": a.seeds, "noise_task": a.noise_task, "aux_task": a.aux_task,
                "main_sentences": a.main_sentences, "aux_sentences": a.aux_sentences }),
    )?
    .write(&a.out)?;
    let corpora = if config.data.is_empty() {
        toy::toy_corpora(toy::BUNDLED_SIZES, toy::BUNDLED_SEED)
    } else {
        load_corpora(&config, &base)?
    };
    let chunk = find_task(&corpora, &a.noise_task)?;
    let pos = find_task(&corpora, &a.aux_task)?;
    let configs: Vec<TrainConfig> = a
        .seeds
        .iter()
        .map(|&s| {
            let mut c = config.clone();
            c.seed = s;
            c
        })
        .collect();
    let curves = sluice_core::training::parallel_map(configs, a.jobs, |c| {
        run_noise_experiment(&chunk, &pos, a.main_sentences, a.aux_sentences, &c)
    })?;
    let mut csv = String::new();
    for (i, c) in curves.iter().enumerate() {
        let text = c.to_csv();
        let body = if i == 0 {
            &text[..]
        } else {
            text.split_once('\n').map_or("", |(_, b)| b)
        };
        csv.push_str(body);
    }
    write_file(&a.out, "noise.csv", &csv)?;
    Ok(())
}

fn cmd_ablate(a: AblateArgs) -> Result<()> {
    let (config, base) = a.config.resolve()?;
    RunManifest::new("ablate", &config, &base, &a.out, json!({ "jobs": a.jobs }))?.write(&a.out)?;
    let corpora = load_corpora(&config, &base)?;
    let rows = run_ablation(&config, &corpora, &ABLATION_GRID, a.jobs)?;
    write_file(&a.out, "ablation.csv", &ablation_csv(&rows))
}

fn cmd_gen_toy(a: GenToyArgs) -> Result<()> {
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let splits = toy::toy_splits(toy::BUNDLED_SIZES, a.seed);
    for (name, sentences) in toy::SPLIT_FILES.iter().zip(&splits) {
        write_file(&a.out, name, &toy::render(sentences))?;
    }
    Ok(())
}
