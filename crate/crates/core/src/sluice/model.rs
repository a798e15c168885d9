use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::mixing::{alpha_combine, beta_mix, count_extra_params, AlphaUnit, BetaMixer};
use super::preset::{AlphaInit, Architecture, BetaPattern, Preset};
use crate::data::{TaggedSentence, TaskSpec};
use crate::diffcore::{Axis, Gradients, ParamStore, Rng, Tape, Tensor, Var};
use crate::encoder::{
    argmax, merge_subspaces, split_subspaces, EmbeddingTable, OutputHead, RecurrentLayer,
    Vocabulary, SUBSPACES,
};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Everything needed to rebuild a model's structure and initial weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub tasks: Vec<TaskSpec>,
    pub main_task: usize,
    pub layers: usize,
    pub hidden: usize,
    pub word_dim: usize,
    pub char_dim: usize,
    /// 0 disables the character encoder.
    pub char_hidden: usize,
    pub mlp_dim: usize,
    pub preset: Preset,
    pub architecture: Architecture,
    pub alpha_init: AlphaInit,
    pub lambdas: Vec<f64>,
    pub ortho_weight: f64,
    /// Initialize every task network from the same random stream.
    pub symmetric_init: bool,
    pub seed: u64,
}

impl ModelConfig {
    /// Defaults of the full-size tagger for the given tasks.
    pub fn new(tasks: Vec<TaskSpec>) -> Self {
        let m = tasks.len();
        let main_task = tasks.iter().position(|t| t.is_main).unwrap_or(0);
        ModelConfig {
            tasks,
            main_task,
            layers: 3,
            hidden: 100,
            word_dim: 64,
            char_dim: 100,
            char_hidden: 50,
            mlp_dim: 100,
            preset: Preset::LearnedSluice,
            architecture: Preset::LearnedSluice.architecture(),
            alpha_init: AlphaInit::Biased,
            lambdas: vec![1.0; m],
            ortho_weight: 0.01,
            symmetric_init: false,
            seed: 1,
        }
    }

    pub fn with_preset(mut self, preset: Preset) -> Self {
        self.preset = preset;
        self.architecture = preset.architecture();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.tasks.is_empty() {
            return Err(Error::Config("at least one task is required".into()));
        }
        for t in &self.tasks {
            t.validate()?;
        }
        let mut names: Vec<&str> = self.tasks.iter().map(|t| t.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.tasks.len() {
            return Err(Error::Config("task names must be unique".into()));
        }
        if self.main_task >= self.tasks.len() {
            return Err(Error::Config(format!(
                "main task index {} out of range for {} tasks",
                self.main_task,
                self.tasks.len()
            )));
        }
        if self.layers == 0 {
            return Err(Error::Config("layers must be >= 1".into()));
        }
        if self.hidden == 0 || self.hidden % SUBSPACES != 0 {
            return Err(Error::Config(format!(
                "hidden size {} must be a positive multiple of {SUBSPACES}",
                self.hidden
            )));
        }
        if self.word_dim == 0 || self.mlp_dim == 0 {
            return Err(Error::Config(
                "word_dim and mlp_dim must be positive".into(),
            ));
        }
        if self.char_hidden > 0 && self.char_dim == 0 {
            return Err(Error::Config(
                "char_dim must be positive when char_hidden > 0".into(),
            ));
        }
        if self.lambdas.len() != self.tasks.len() {
            return Err(Error::Config(format!(
                "{} lambda weights for {} tasks",
                self.lambdas.len(),
                self.tasks.len()
            )));
        }
        if self.lambdas.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::Config(
                "lambda weights must be finite and >= 0".into(),
            ));
        }
        if !self.ortho_weight.is_finite() || self.ortho_weight < 0.0 {
            return Err(Error::Config("ortho_weight must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// One task's private stack of recurrent layers and its head.
#[derive(Clone, Debug)]
pub struct TaskNetwork {
    pub layers: Vec<RecurrentLayer>,
    pub head: OutputHead,
}

/// Values recorded during one forward pass over a sentence.
#[derive(Clone, Debug)]
pub struct ForwardPass {
    /// `[task]` → `T × labels`.
    pub logits: Vec<Var>,
    /// `[task][layer]` → `T × 2H`, after α mixing.
    pub layers: Vec<Vec<Var>>,
    /// `[task]` → what the head reads.
    pub head_inputs: Vec<Var>,
}

/// Loss of one batch together with each present task's mean cross-entropy.
#[derive(Clone, Debug)]
pub struct BatchLoss {
    pub total: Var,
    pub task_losses: Vec<Option<f64>>,
}

/// What one update saw, measured before the parameters moved.
#[derive(Clone, Debug)]
pub struct StepStats {
    pub loss: f64,
    /// Mean token cross-entropy of each task present in the batch.
    pub task_losses: Vec<Option<f64>>,
    /// Euclidean norm of the gradient on all raw α parameters.
    pub alpha_grad_norm: f64,
}

/// M task networks joined by α units and read out through β mixers.
#[derive(Clone, Debug)]
pub struct SluiceModel<T: Scalar> {
    pub config: ModelConfig,
    pub vocab: Vocabulary,
    pub store: ParamStore<T>,
    pub embedding: EmbeddingTable,
    pub tasks: Vec<TaskNetwork>,
    pub alpha_units: Vec<AlphaUnit<T>>,
    pub beta_mixers: Vec<BetaMixer<T>>,
    updates: usize,
}

const EMBEDDING_STREAM: u64 = 1;
const TASK_STREAM: u64 = 100;

impl<T: Scalar> SluiceModel<T> {
    pub fn new(config: ModelConfig, vocab: Vocabulary) -> Result<Self> {
        config.validate()?;
        let root = Rng::new(config.seed);
        let mut store = ParamStore::new();
        let embedding = EmbeddingTable::new(
            &mut store,
            &mut root.fork(EMBEDDING_STREAM),
            &vocab,
            config.word_dim,
            config.char_dim,
            config.char_hidden,
        );
        let layer_out = 2 * config.hidden;
        let head_in = match config.architecture.beta {
            BetaPattern::Concat => config.layers * layer_out,
            _ => layer_out,
        };
        let mut tasks = Vec::with_capacity(config.tasks.len());
        for (m, spec) in config.tasks.iter().enumerate() {
            let stream = if config.symmetric_init { 0 } else { m as u64 };
            let mut rng = root.fork(TASK_STREAM + stream);
            let layers = (0..config.layers)
                .map(|k| {
                    let input = if k == 0 {
                        embedding.output_dim()
                    } else {
                        layer_out
                    };
                    RecurrentLayer::new(
                        &mut store,
                        &mut rng,
                        &format!("task{m}.layer{k}"),
                        k,
                        input,
                        config.hidden,
                    )
                })
                .collect();
            let head = OutputHead::new(
                &mut store,
                &mut rng,
                &format!("task{m}.head"),
                head_in,
                config.mlp_dim,
                spec.num_labels(),
            );
            tasks.push(TaskNetwork { layers, head });
        }
        let m = config.tasks.len();
        let alpha_units = (0..config.layers)
            .map(|k| {
                AlphaUnit::new(
                    &mut store,
                    k,
                    m,
                    config.architecture.alpha,
                    config.alpha_init,
                )
            })
            .collect();
        let beta_mixers = (0..m)
            .map(|t| {
                BetaMixer::new(
                    &mut store,
                    t,
                    config.main_task,
                    config.layers,
                    config.architecture.beta,
                )
            })
            .collect();
        Ok(SluiceModel {
            config,
            vocab,
            store,
            embedding,
            tasks,
            alpha_units,
            beta_mixers,
            updates: 0,
        })
    }

    pub fn num_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn num_layers(&self) -> usize {
        self.config.layers
    }

    /// Number of SGD updates applied so far.
    pub fn updates(&self) -> usize {
        self.updates
    }

    pub(crate) fn set_updates(&mut self, n: usize) {
        self.updates = n;
    }

    /// Constrains α and β to a named architecture. Only allowed before
    /// the first update.
    pub fn apply_preset(&mut self, preset: Preset) -> Result<()> {
        self.set_architecture(preset.architecture())?;
        self.config.preset = preset;
        Ok(())
    }

    /// Like [`apply_preset`](Self::apply_preset) for an arbitrary α/β
    /// pattern combination. Switching between mixture and concatenation
    /// changes the head's input width and is not possible here.
    pub fn set_architecture(&mut self, arch: Architecture) -> Result<()> {
        if self.updates > 0 {
            return Err(Error::Contract(format!(
                "cannot change the sharing architecture after {} training updates",
                self.updates
            )));
        }
        let concat_now = self.config.architecture.beta == BetaPattern::Concat;
        if concat_now != (arch.beta == BetaPattern::Concat) && self.config.layers > 1 {
            return Err(Error::Contract(
                "switching to or from concatenation requires rebuilding the model".into(),
            ));
        }
        for unit in &mut self.alpha_units {
            unit.reset(&mut self.store, arch.alpha, self.config.alpha_init);
        }
        for mixer in &mut self.beta_mixers {
            mixer.reset(&mut self.store, arch.beta, self.config.main_task);
        }
        self.config.architecture = arch;
        Ok(())
    }

    /// Introspected number of α and β entries.
    pub fn extra_param_census(&self) -> (usize, usize) {
        let alpha = self.alpha_units.iter().map(|u| u.size * u.size).sum();
        let beta = self.beta_mixers.iter().map(|b| b.layers()).sum();
        (alpha, beta)
    }

    /// Number of distinct trainable α and β values after freezing and tying.
    pub fn trainable_extra_params(&self) -> (usize, usize) {
        let alpha = self.alpha_units.iter().map(|u| u.trainable()).sum();
        let beta = self.beta_mixers.iter().map(|b| b.trainable()).sum();
        (alpha, beta)
    }

    /// Expected census for this model's shape.
    pub fn expected_census(&self) -> (usize, usize) {
        count_extra_params(self.num_tasks(), self.num_layers(), SUBSPACES)
    }

    pub fn forward(&self, tape: &mut Tape<'_, T>, tokens: &[String]) -> Result<ForwardPass> {
        if tokens.is_empty() {
            return Err(Error::Input("cannot tag an empty sentence".into()));
        }
        let m = self.num_tasks();
        let x = self.embedding.embed_sentence(tape, &self.vocab, tokens)?;
        let mut inputs = vec![x; m];
        let mut layers = vec![Vec::with_capacity(self.num_layers()); m];
        for (k, unit) in self.alpha_units.iter().enumerate() {
            let mut parts = Vec::with_capacity(m * SUBSPACES);
            for (t, net) in self.tasks.iter().enumerate() {
                let out = net.layers[k].forward(tape, inputs[t])?;
                parts.extend(split_subspaces(tape, out)?);
            }
            let alpha = unit.matrix(tape)?;
            let mixed = alpha_combine(tape, alpha, &parts)?;
            for t in 0..m {
                let merged = merge_subspaces(tape, &mixed[t * SUBSPACES..(t + 1) * SUBSPACES])?;
                layers[t].push(merged);
                inputs[t] = merged;
            }
        }
        let mut logits = Vec::with_capacity(m);
        let mut head_inputs = Vec::with_capacity(m);
        for t in 0..m {
            let h = match self.config.architecture.beta {
                BetaPattern::Concat => tape.concat(&layers[t], Axis::Cols)?,
                _ => {
                    let beta = self.beta_mixers[t].weights(tape)?;
                    beta_mix(tape, beta, &layers[t])?
                }
            };
            head_inputs.push(h);
            logits.push(self.tasks[t].head.logits(tape, h)?);
        }
        Ok(ForwardPass {
            logits,
            layers,
            head_inputs,
        })
    }

    /// Per-task logits for one sentence.
    pub fn forward_all_tasks(&self, tape: &mut Tape<'_, T>, tokens: &[String]) -> Result<Vec<Var>> {
        Ok(self.forward(tape, tokens)?.logits)
    }

    /// `Σ_m Σ_k Σ_direction ‖G₁ᵀ G₂‖²_F` over the LSTM input weights, where
    /// `G_s` holds the columns feeding hidden subspace `s`.
    pub fn orthogonality_penalty(&self, tape: &mut Tape<'_, T>) -> Result<Var> {
        let mut terms = Vec::new();
        for net in &self.tasks {
            for layer in &net.layers {
                for cell in layer.cells() {
                    let g1 = cell.input_subspace(tape, 0)?;
                    let g2 = cell.input_subspace(tape, 1)?;
                    let g1t = tape.transpose(g1)?;
                    let prod = tape.matmul(g1t, g2)?;
                    terms.push(tape.frobenius_sq(prod)?);
                }
            }
        }
        tape.add_all(&terms)
    }

    /// Current value of the orthogonality penalty.
    pub fn subspace_overlap(&self) -> Result<f64> {
        let mut tape = Tape::new(&self.store);
        let p = self.orthogonality_penalty(&mut tape)?;
        Ok(tape.value(p).item()?.as_f64())
    }

    /// `Σ_m λ_m L_m + γ L_c` where `L_m` is the mean token cross-entropy of
    /// the task-`m` examples in `batch` (absent tasks contribute nothing).
    ///
    /// Examples with identical token sequences share one forward pass.
    pub fn total_loss(
        &self,
        tape: &mut Tape<'_, T>,
        batch: &[(usize, &TaggedSentence)],
    ) -> Result<BatchLoss> {
        if batch.is_empty() {
            return Err(Error::Input("empty batch".into()));
        }
        let m = self.num_tasks();
        let mut groups: Vec<(&[String], Vec<(usize, &[usize])>)> = Vec::new();
        let mut index: HashMap<&[String], usize> = HashMap::new();
        for &(task, sentence) in batch {
            if task >= m {
                return Err(Error::Input(format!(
                    "task index {task} out of range for {m} tasks"
                )));
            }
            if sentence.tokens.len() != sentence.tags.len() {
                return Err(Error::Input(format!(
                    "sentence with {} tokens and {} tags",
                    sentence.tokens.len(),
                    sentence.tags.len()
                )));
            }
            let g = *index.entry(&sentence.tokens).or_insert_with(|| {
                groups.push((&sentence.tokens, Vec::new()));
                groups.len() - 1
            });
            groups[g].1.push((task, &sentence.tags));
        }
        let mut ce: Vec<Vec<Var>> = vec![Vec::new(); m];
        let mut tokens = vec![0usize; m];
        for (sentence, members) in &groups {
            let pass = self.forward(tape, sentence)?;
            for &(task, tags) in members {
                ce[task].push(tape.softmax_cross_entropy(pass.logits[task], tags)?);
                tokens[task] += tags.len();
            }
        }
        let mut terms = Vec::new();
        let mut task_losses = vec![None; m];
        for t in 0..m {
            if ce[t].is_empty() {
                continue;
            }
            let sum = tape.add_all(&ce[t])?;
            let n = tokens[t] as f64;
            task_losses[t] = Some(tape.value(sum).item()?.as_f64() / n);
            terms.push(tape.scale(sum, T::lit(self.config.lambdas[t] / n))?);
        }
        if self.config.ortho_weight > 0.0 {
            let penalty = self.orthogonality_penalty(tape)?;
            terms.push(tape.scale(penalty, T::lit(self.config.ortho_weight))?);
        }
        Ok(BatchLoss {
            total: tape.add_all(&terms)?,
            task_losses,
        })
    }

    /// Gradients of [`total_loss`](Self::total_loss) on `batch`.
    pub fn gradients(
        &self,
        batch: &[(usize, &TaggedSentence)],
    ) -> Result<(Gradients<T>, f64, Vec<Option<f64>>)> {
        let mut tape = Tape::new(&self.store);
        let loss = self.total_loss(&mut tape, batch)?;
        let value = tape.value(loss.total).item()?.as_f64();
        let grads = tape.backward(loss.total)?;
        Ok((grads, value, loss.task_losses))
    }

    /// One SGD update on `batch`.
    pub fn train_step(&mut self, batch: &[(usize, &TaggedSentence)], lr: T) -> Result<StepStats> {
        let (grads, loss, task_losses) = self.gradients(batch)?;
        let alpha_grad_norm = self
            .alpha_units
            .iter()
            .filter_map(|u| grads.get(u.raw))
            .map(|g| g.norm_sq().as_f64())
            .sum::<f64>()
            .sqrt();
        self.store.accumulate(&grads)?;
        self.store.sgd_step(lr)?;
        self.updates += 1;
        Ok(StepStats {
            loss,
            task_losses,
            alpha_grad_norm,
        })
    }

    /// Predicted label ids for every task.
    pub fn predict(&self, tokens: &[String]) -> Result<Vec<Vec<usize>>> {
        let mut tape = Tape::new(&self.store);
        let logits = self.forward_all_tasks(&mut tape, tokens)?;
        Ok(logits
            .iter()
            .map(|&l| {
                let v = tape.value(l);
                (0..v.rows()).map(|r| argmax(v.row_slice(r))).collect()
            })
            .collect())
    }

    /// Evaluated α matrix of layer `k`.
    pub fn alpha_matrix(&self, k: usize) -> Tensor<T> {
        self.alpha_units[k].values(&self.store)
    }

    /// Evaluated β weights of task `m`.
    pub fn beta_weights(&self, m: usize) -> Vec<T> {
        self.beta_mixers[m].values(&self.store)
    }

    pub fn task_index(&self, name: &str) -> Option<usize> {
        self.config.tasks.iter().position(|t| t.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(tasks: usize, layers: usize) -> ModelConfig {
        let specs = (0..tasks)
            .map(|m| {
                TaskSpec::new(format!("t{m}"), vec!["A".into(), "B".into(), "C".into()]).unwrap()
            })
            .collect();
        let mut c = ModelConfig::new(specs);
        c.layers = layers;
        c.hidden = 4;
        c.word_dim = 3;
        c.char_dim = 2;
        c.char_hidden = 2;
        c.mlp_dim = 5;
        c
    }

    fn vocab() -> Vocabulary {
        Vocabulary::from_parts(
            vec!["the".into(), "cat".into(), "sat".into()],
            "thecasat".chars().collect(),
        )
    }

    fn sentence(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn census_matches_formula() {
        for (m, k) in [(1, 1), (2, 3), (4, 3)] {
            let model = SluiceModel::<f64>::new(tiny_config(m, k), vocab()).unwrap();
            assert_eq!(model.extra_param_census(), count_extra_params(m, k, 2));
            assert_eq!(model.extra_param_census(), (4 * k * m * m, k * m));
        }
    }

    #[test]
    fn output_shapes() {
        let model = SluiceModel::<f64>::new(tiny_config(3, 2), vocab()).unwrap();
        let mut tape = Tape::new(&model.store);
        let toks = sentence(&["the", "cat", "sat", "dog"]);
        let logits = model.forward_all_tasks(&mut tape, &toks).unwrap();
        assert_eq!(logits.len(), 3);
        for l in logits {
            assert_eq!(tape.shape(l), (4, 3));
        }
        assert!(matches!(
            model.forward_all_tasks(&mut tape, &[]),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn hard_sharing_tasks_agree_at_init() {
        let mut c = tiny_config(2, 3).with_preset(Preset::HardSharing);
        c.symmetric_init = true;
        let model = SluiceModel::<f64>::new(c, vocab()).unwrap();
        let mut tape = Tape::new(&model.store);
        let pass = model
            .forward(&mut tape, &sentence(&["the", "cat", "sat"]))
            .unwrap();
        for k in 0..3 {
            let a = tape.value(pass.layers[0][k]);
            let b = tape.value(pass.layers[1][k]);
            assert!(a.max_abs_diff(b) == 0.0);
        }
    }

    #[test]
    fn identity_alpha_with_tied_weights_gives_identical_tasks() {
        let mut c = tiny_config(3, 2).with_preset(Preset::SingleTask);
        c.symmetric_init = true;
        let model = SluiceModel::<f64>::new(c, vocab()).unwrap();
        let mut tape = Tape::new(&model.store);
        let pass = model
            .forward(&mut tape, &sentence(&["sat", "the"]))
            .unwrap();
        for t in 1..3 {
            for k in 0..2 {
                assert_eq!(tape.value(pass.layers[0][k]), tape.value(pass.layers[t][k]));
            }
        }
    }

    #[test]
    fn orthogonality_penalty_matches_triple_loop() {
        let model = SluiceModel::<f64>::new(tiny_config(2, 2), vocab()).unwrap();
        let mut expect = 0.0;
        let half = model.config.hidden / 2;
        for net in &model.tasks {
            for layer in &net.layers {
                for cell in layer.cells() {
                    let w = model.store.value(cell.w_ih);
                    let cols = |s: usize| -> Vec<usize> {
                        (0..4)
                            .flat_map(|g| (0..half).map(move |u| g * cell.hidden + s * half + u))
                            .collect()
                    };
                    let (c1, c2) = (cols(0), cols(1));
                    for &a in &c1 {
                        for &b in &c2 {
                            let dot: f64 = (0..w.rows()).map(|r| w.get(r, a) * w.get(r, b)).sum();
                            expect += dot * dot;
                        }
                    }
                }
            }
        }
        let got = model.subspace_overlap().unwrap();
        assert!(
            (got - expect).abs() < 1e-10 * expect.max(1.0),
            "{got} vs {expect}"
        );
    }

    #[test]
    fn orthogonal_subspaces_have_zero_penalty() {
        let mut model = SluiceModel::<f64>::new(tiny_config(1, 1), vocab()).unwrap();
        let ids: Vec<_> = model.tasks[0].layers[0]
            .cells()
            .iter()
            .map(|c| (c.w_ih, c.hidden))
            .collect();
        for (id, hidden) in ids {
            let w = model.store.value_mut(id);
            // Subspace 1 columns read only input row 0, subspace 2 only row 1.
            for r in 0..w.rows() {
                for c in 0..w.cols() {
                    let s = (c % hidden) / (hidden / 2);
                    w.set(r, c, if r == s { 0.7 } else { 0.0 });
                }
            }
        }
        assert_eq!(model.subspace_overlap().unwrap(), 0.0);
    }

    fn tagged(words: &[&str], tags: &[usize]) -> TaggedSentence {
        TaggedSentence::new(sentence(words), tags.to_vec()).unwrap()
    }

    #[test]
    fn lambda_scales_task_loss() {
        let mut c = tiny_config(2, 1);
        c.ortho_weight = 0.0;
        let s = tagged(&["the", "cat"], &[0, 2]);
        let base = SluiceModel::<f64>::new(c.clone(), vocab()).unwrap();
        c.lambdas = vec![2.0, 1.0];
        let doubled = SluiceModel::<f64>::new(c, vocab()).unwrap();
        let l1 = base.gradients(&[(0, &s)]).unwrap().1;
        let l2 = doubled.gradients(&[(0, &s)]).unwrap().1;
        assert!((l2 - 2.0 * l1).abs() < 1e-14);
        assert!(matches!(base.gradients(&[]), Err(Error::Input(_))));
    }

    #[test]
    fn single_task_loss_is_mean_cross_entropy() {
        let mut c = tiny_config(1, 2);
        c.ortho_weight = 0.0;
        let model = SluiceModel::<f64>::new(c, vocab()).unwrap();
        let s = tagged(&["the", "cat", "sat"], &[1, 0, 2]);
        let loss = model.gradients(&[(0, &s)]).unwrap().1;
        let mut tape = Tape::new(&model.store);
        let logits = model.forward_all_tasks(&mut tape, &s.tokens).unwrap()[0];
        let v = tape.value(logits);
        let expect: f64 = (0..3)
            .map(|r| {
                let row = v.row_slice(r);
                crate::diffcore::log_sum_exp(row) - row[s.tags[r]]
            })
            .sum::<f64>()
            / 3.0;
        assert!((loss - expect).abs() < 1e-12);
    }

    #[test]
    fn presets_only_before_training() {
        let mut model = SluiceModel::<f64>::new(tiny_config(2, 3), vocab()).unwrap();
        assert_eq!(model.trainable_extra_params(), (48, 6));
        model.apply_preset(Preset::HardSharing).unwrap();
        assert_eq!(model.trainable_extra_params(), (0, 6));
        for k in 0..3 {
            assert!(model.alpha_matrix(k).data().iter().all(|&v| v == 0.25));
        }
        model.apply_preset(Preset::CrossStitch).unwrap();
        assert_eq!(model.trainable_extra_params(), (12, 0));
        assert_eq!(model.beta_weights(0), [0.0, 0.0, 1.0]);
        model.apply_preset(Preset::GroupLasso).unwrap();
        assert_eq!(model.trainable_extra_params(), (24, 6));
        let s = tagged(&["the"], &[1]);
        model.train_step(&[(0, &s)], 0.1).unwrap();
        assert!(matches!(
            model.apply_preset(Preset::LearnedSluice),
            Err(Error::Contract(_))
        ));
    }
}
