//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use sluice_core::data::{TaggedSentence, TaskSpec};
use sluice_core::diffcore::{Axis, ElementwiseOp, Entry, ParamStore, Rng, Tape, Tensor, Var};
use sluice_core::encoder::Vocabulary;
use sluice_core::sluice::{ModelConfig, Preset, SluiceModel};

pub const STEP: f64 = 1e-5;
/// Gradients smaller than this are compared on an absolute scale: with a
/// loss of order 1 and this step, central differences carry about 1e-10 of
/// rounding noise, so smaller gradients cannot be resolved relatively.
pub const FLOOR: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;
pub const SEEDS: u64 = 20;

pub fn rel_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(FLOOR)
}

/// Worst relative error between the tape's gradient and central
/// differences, over every parameter entry of `store` (or a random subset
/// of `sample` entries per parameter).
pub fn check<F>(store: &mut ParamStore<f64>, rng: &mut Rng, sample: Option<usize>, f: F) -> f64
where
    F: Fn(&mut Tape<'_, f64>) -> Var,
{
    let grads = {
        let mut tape = Tape::new(store);
        let loss = f(&mut tape);
        tape.backward(loss).unwrap()
    };
    let eval = |store: &ParamStore<f64>| -> f64 {
        let mut tape = Tape::new(store);
        let loss = f(&mut tape);
        tape.value(loss).item().unwrap()
    };
    let ids: Vec<_> = store.iter().map(|(id, _)| id).collect();
    let mut worst: f64 = 0.0;
    for id in ids {
        let n = store.value(id).len();
        let entries: Vec<usize> = match sample {
            Some(k) if k < n => (0..k).map(|_| rng.below(n)).collect(),
            _ => (0..n).collect(),
        };
        for i in entries {
            let orig = store.value(id).data()[i];
            store.value_mut(id).data_mut()[i] = orig + STEP;
            let up = eval(store);
            store.value_mut(id).data_mut()[i] = orig - STEP;
            let down = eval(store);
            store.value_mut(id).data_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * STEP);
            let analytic = grads.get(id).map_or(0.0, |g| g.data()[i]);
            let err = rel_error(analytic, numeric);
            if err >= TOLERANCE {
                eprintln!(
                    "{}[{i}]: analytic {analytic} numeric {numeric} (rel {err})",
                    store.get(id).name
                );
            }
            worst = worst.max(err);
        }
    }
    worst
}

fn random_param(store: &mut ParamStore<f64>, name: &str, r: usize, c: usize, rng: &mut Rng) {
    store.add(name, sluice_core::diffcore::uniform(r, c, 1.0, rng));
}

/// Every tape operation chained into one scalar, checked for one seed.
pub fn ops_check(seed: u64) -> f64 {
    let mut rng = Rng::new(seed);
    let mut store = ParamStore::new();
    random_param(&mut store, "a", 3, 4, &mut rng);
    random_param(&mut store, "b", 4, 2, &mut rng);
    random_param(&mut store, "c", 3, 4, &mut rng);
    random_param(&mut store, "bias", 1, 2, &mut rng);
    random_param(&mut store, "free", 1, 3, &mut rng);
    let ids: Vec<_> = store.iter().map(|(id, _)| id).collect();
    let gold = vec![rng.below(2), rng.below(2), rng.below(2)];
    check(&mut store, &mut rng, None, |tape| {
        let a = tape.param(ids[0]);
        let b = tape.param(ids[1]);
        let c = tape.param(ids[2]);
        let bias = tape.param(ids[3]);
        let free = tape.param(ids[4]);
        let sum = tape.add(a, c).unwrap();
        let prod = tape.mul(sum, a).unwrap();
        let th = tape.tanh(prod).unwrap();
        let sg = tape.sigmoid(c).unwrap();
        let ew = tape.elementwise(ElementwiseOp::Mul, &[th, sg]).unwrap();
        let mm = tape.matmul(ew, b).unwrap();
        let biased = tape.add_row(mm, bias).unwrap();
        let scaled = tape.scale(biased, 1.7).unwrap();
        let ce = tape.softmax_cross_entropy(scaled, &gold).unwrap();
        let t = tape.transpose(a).unwrap();
        let sl = tape.slice(t, Axis::Cols, 1, 2).unwrap();
        let rs = tape.reshape(sl, 2, 4).unwrap();
        let cat = tape.concat(&[rs, rs], Axis::Rows).unwrap();
        let rows = tape.gather_rows(cat, &[3, 0, 3]).unwrap();
        let fro = tape.frobenius_sq(rows).unwrap();
        let entries = [
            Entry::Free(0),
            Entry::Fixed(0.5),
            Entry::Free(2),
            Entry::Free(0),
        ];
        let m = tape.assemble(Some(free), 2, 2, &entries).unwrap();
        let mm2 = tape.matmul(m, rs).unwrap();
        let s = tape.sum(mm2).unwrap();
        tape.add_all(&[ce, fro, s]).unwrap()
    })
}

pub fn two_tasks() -> Vec<TaskSpec> {
    vec![
        TaskSpec::new("a", vec!["X".into(), "Y".into(), "Z".into()]).unwrap(),
        TaskSpec::new("b", vec!["P".into(), "Q".into()]).unwrap(),
    ]
}

pub fn tiny_vocab() -> Vocabulary {
    Vocabulary::from_parts(
        vec!["the".into(), "cat".into(), "sat".into()],
        "thecas".chars().collect(),
    )
}

pub fn tiny_model(seed: u64, preset: Preset, chars: bool) -> SluiceModel<f64> {
    let mut c = ModelConfig::new(two_tasks()).with_preset(preset);
    c.layers = 2;
    c.hidden = 4;
    c.word_dim = 3;
    c.char_dim = 2;
    c.char_hidden = if chars { 2 } else { 0 };
    c.mlp_dim = 3;
    c.ortho_weight = 0.3;
    c.seed = seed;
    SluiceModel::new(c, tiny_vocab()).unwrap()
}

pub const WORDS: [&str; 4] = ["the", "cat", "sat", "mat"];

pub fn random_tokens(rng: &mut Rng, max_len: usize) -> Vec<String> {
    let len = 1 + rng.below(max_len);
    (0..len)
        .map(|_| WORDS[rng.below(WORDS.len())].to_string())
        .collect()
}

/// One sentence per task with random tags.
pub fn batch(rng: &mut Rng) -> Vec<(usize, TaggedSentence)> {
    let mut out = Vec::new();
    for task in 0..2 {
        let len = 2 + rng.below(3);
        let tokens: Vec<String> = (0..len).map(|_| WORDS[rng.below(4)].to_string()).collect();
        let tags = (0..len)
            .map(|_| rng.below(if task == 0 { 3 } else { 2 }))
            .collect();
        out.push((task, TaggedSentence::new(tokens, tags).unwrap()));
    }
    out
}

pub fn perturb_alpha(model: &mut SluiceModel<f64>, rng: &mut Rng, amount: f64) {
    for unit in &model.alpha_units {
        let v = model.store.value_mut(unit.raw);
        for x in v.data_mut() {
            *x += rng.uniform(-amount, amount);
        }
    }
}

/// Full sluice loss (learned α and β, orthogonality term, characters on
/// even seeds) checked on a random sample of entries.
pub fn sluice_loss_check(seed: u64) -> f64 {
    let mut model = tiny_model(seed, Preset::LearnedSluice, seed % 2 == 0);
    let mut rng = Rng::new(1000 + seed);
    // Move α off its structured initial values.
    perturb_alpha(&mut model, &mut rng, 0.3);
    let data = batch(&mut rng);
    let mut store = std::mem::take(&mut model.store);
    check(&mut store, &mut rng, Some(6), |tape| {
        let refs: Vec<(usize, &TaggedSentence)> = data.iter().map(|(t, s)| (*t, s)).collect();
        model.total_loss(tape, &refs).unwrap().total
    })
}

pub fn preset_loss_check(preset: Preset, seed: u64) -> f64 {
    let mut model = tiny_model(77 + seed, preset, false);
    let mut rng = Rng::new(seed);
    let data = batch(&mut rng);
    let mut store = std::mem::take(&mut model.store);
    check(&mut store, &mut rng, Some(6), |tape| {
        let refs: Vec<(usize, &TaggedSentence)> = data.iter().map(|(t, s)| (*t, s)).collect();
        model.total_loss(tape, &refs).unwrap().total
    })
}

pub fn max_abs_diff(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Plain-loop whole-layer mixing: `out[t] = Σ_u a[t][u] · h[u]`.
fn mix_layers(a: &[Vec<f64>], h: &[Tensor<f64>]) -> Vec<Tensor<f64>> {
    let (rows, cols) = h[0].shape();
    (0..h.len())
        .map(|t| {
            let mut out = vec![0.0; rows * cols];
            for (u, hu) in h.iter().enumerate() {
                for (o, x) in out.iter_mut().zip(hu.data()) {
                    *o += a[t][u] * x;
                }
            }
            Tensor::from_vec(rows, cols, out).unwrap()
        })
        .collect()
}

/// Largest logit difference between the cross-stitch preset and a
/// separately written cross-stitch network (each task's layers read the
/// whole-layer α mixture of the previous layer, the head reads the last
/// mixed layer) sharing the same weights.
pub fn cross_stitch_gap(seed: u64, tokens: &[String]) -> f64 {
    let mut model = tiny_model(seed, Preset::CrossStitch, seed % 2 == 1);
    let mut rng = Rng::new(500 + seed);
    perturb_alpha(&mut model, &mut rng, 0.5);
    let m = model.num_tasks();
    let mut tape = Tape::new(&model.store);
    let fast: Vec<Tensor<f64>> = model
        .forward(&mut tape, tokens)
        .unwrap()
        .logits
        .iter()
        .map(|&v| tape.value(v).clone())
        .collect();

    let mut tape = Tape::new(&model.store);
    let x = model
        .embedding
        .embed_sentence(&mut tape, &model.vocab, tokens)
        .unwrap();
    let x = tape.value(x).clone();
    let mut inputs = vec![x; m];
    for k in 0..model.num_layers() {
        let alpha = model.alpha_matrix(k);
        // Whole-layer weight: the (task, subspace 1) → (task, subspace 1) entry.
        let a: Vec<Vec<f64>> = (0..m)
            .map(|t| (0..m).map(|u| alpha.get(2 * t, 2 * u)).collect())
            .collect();
        let outputs: Vec<Tensor<f64>> = (0..m)
            .map(|t| {
                let input = tape.constant(inputs[t].clone());
                let out = model.tasks[t].layers[k].forward(&mut tape, input).unwrap();
                tape.value(out).clone()
            })
            .collect();
        inputs = mix_layers(&a, &outputs);
    }
    let mut gap: f64 = 0.0;
    for t in 0..m {
        let h = tape.constant(inputs[t].clone());
        let logits = model.tasks[t].head.logits(&mut tape, h).unwrap();
        gap = gap.max(max_abs_diff(tape.value(logits), &fast[t]));
    }
    gap
}

/// Largest logit difference between a model whose β is one-hot at layer
/// `j` and each head applied directly to layer `j`'s output.
pub fn beta_one_hot_gap(seed: u64, j: usize, tokens: &[String]) -> f64 {
    let mut model = tiny_model(seed, Preset::LearnedSluice, false);
    let mut rng = Rng::new(900 + seed);
    perturb_alpha(&mut model, &mut rng, 0.3);
    for mixer in &model.beta_mixers {
        let v = model.store.value_mut(mixer.raw);
        for (i, x) in v.data_mut().iter_mut().enumerate() {
            *x = if i == j { 1.0 } else { 0.0 };
        }
    }
    let mut tape = Tape::new(&model.store);
    let pass = model.forward(&mut tape, tokens).unwrap();
    let mut gap: f64 = 0.0;
    for t in 0..model.num_tasks() {
        let direct = model.tasks[t]
            .head
            .logits(&mut tape, pass.layers[t][j])
            .unwrap();
        gap = gap.max(max_abs_diff(tape.value(direct), tape.value(pass.logits[t])));
    }
    gap
}

/// Trains a hard-sharing model with symmetric initialization, γ = 0 and
/// equal λ on batches where both tasks label the same sentence the same
/// way; returns the largest difference between corresponding per-task
/// parameters after every step.
pub fn hard_sharing_divergence(seed: u64, steps: usize) -> f64 {
    let specs = vec![
        TaskSpec::new("a", vec!["X".into(), "Y".into(), "Z".into()]).unwrap(),
        TaskSpec::new("b", vec!["X".into(), "Y".into(), "Z".into()]).unwrap(),
    ];
    let mut c = ModelConfig::new(specs).with_preset(Preset::HardSharing);
    c.layers = 3;
    c.hidden = 4;
    c.word_dim = 3;
    c.char_dim = 2;
    c.char_hidden = 2;
    c.mlp_dim = 3;
    c.ortho_weight = 0.0;
    c.symmetric_init = true;
    c.seed = seed;
    let mut model = SluiceModel::<f64>::new(c, tiny_vocab()).unwrap();
    let mut rng = Rng::new(seed);
    let pairs: Vec<_> = model
        .store
        .iter()
        .filter_map(|(id, p)| {
            let twin = match p.name.strip_prefix("task0.") {
                Some(rest) => format!("task1.{rest}"),
                None if p.name == "beta.0" => "beta.1".to_string(),
                None => return None,
            };
            Some((id, model.store.id(&twin).expect("twin parameter")))
        })
        .collect();
    assert!(!pairs.is_empty());
    let mut worst: f64 = 0.0;
    for _ in 0..steps {
        let tokens = random_tokens(&mut rng, 5);
        let tags = (0..tokens.len()).map(|_| rng.below(3)).collect();
        let s = TaggedSentence::new(tokens, tags).unwrap();
        model.train_step(&[(0, &s), (1, &s)], 0.1).unwrap();
        for &(a, b) in &pairs {
            worst = worst.max(max_abs_diff(model.store.value(a), model.store.value(b)));
        }
    }
    worst
}
